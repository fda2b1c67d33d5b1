//! Checks shared by the integration and acceptance tests.
//!
//! Concrete evaluation here is written independently of the library so the
//! contractor checks do not trust the code they test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use intbox::absint::{analyze_program, AnalysisConfig};
use intbox::contractor::{hc4_revise, BoxN, Constraint};
use intbox::generate::{program_from_seed, GenConfig};
use intbox::instrument::instrument_program;
use intbox::lang::{parse_program, BinOp, Expr, Ident, Program, Stmt, UnOp};
use intbox::optimize::optimize_program;
use intbox::oracle::{check_equivalence, check_soundness_all, Equivalence, OracleConfig};
use intbox::{ArithOp, CmpOp, Interval};

pub const FUZZ_SEED: u64 = 0x1b0c_2024;

/// All four combinations of interval arithmetic and contractors.
pub fn configs() -> [AnalysisConfig; 4] {
    let mut out = [AnalysisConfig::default(); 4];
    for (i, c) in out.iter_mut().enumerate() {
        c.interval_arith = i & 1 == 0;
        c.use_contractors = i & 2 == 0;
    }
    out
}

pub fn config_name(c: &AnalysisConfig) -> String {
    format!(
        "interval_arith={} use_contractors={}",
        if c.interval_arith { "on" } else { "off" },
        if c.use_contractors { "on" } else { "off" }
    )
}

/// The shipped corpus, sorted by file name.
pub fn corpus() -> Vec<(String, Program)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "mini"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let src = std::fs::read_to_string(&f).unwrap();
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            let p = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

pub fn fuzz_program(index: u64) -> Program {
    program_from_seed(FUZZ_SEED, index, &GenConfig::default())
}

pub fn oracle() -> OracleConfig {
    OracleConfig::default()
}

/// Every reached state lies in the analysis under all four configurations.
pub fn soundness_all_configs(prog: &Program) -> Result<(), String> {
    let analyses: Vec<_> = configs().iter().map(|c| analyze_program(prog, c)).collect();
    let refs: Vec<_> = analyses.iter().collect();
    let found = check_soundness_all(prog, &refs, &oracle()).map_err(|e| e.to_string())?;
    for (c, v) in configs().iter().zip(found) {
        if let Some(first) = v.first() {
            return Err(format!("{} violation(s) under {}: {first}\n{prog}", v.len(), config_name(c)));
        }
    }
    Ok(())
}

fn equivalent(a: &Program, b: &Program, what: &str) -> Result<(), String> {
    match check_equivalence(a, b, &oracle()).map_err(|e| format!("{what}: {e}\n{a}\n{b}"))? {
        Equivalence::Equivalent { .. } => Ok(()),
        Equivalence::Different(c) => Err(format!(
            "{what} changed behavior on choices {:?}: {:?} {:?} vs {:?} {:?}\n{a}\n{b}",
            c.choices, c.left.verdict, c.left.env, c.right.verdict, c.right.env
        )),
    }
}

pub fn optimization_preserves_behavior(prog: &Program, config: &AnalysisConfig) -> Result<(), String> {
    let (out, _) = optimize_program(prog, config);
    equivalent(prog, &out, &format!("optimize ({})", config_name(config)))
}

/// Variables the statement at pre-order position `node` reads in its
/// condition or call arguments.
pub fn anchor_free_vars(prog: &Program, function: &str, node: usize) -> Option<BTreeSet<Ident>> {
    fn vars(e: &Expr, out: &mut BTreeSet<Ident>) {
        match e {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, a) => vars(a, out),
            Expr::Binary(_, l, r) => {
                vars(l, out);
                vars(r, out);
            }
            _ => {}
        }
    }
    fn find<'a>(block: &'a [Stmt], target: usize, next: &mut usize) -> Option<&'a Stmt> {
        for s in block {
            if *next == target {
                return Some(s);
            }
            *next += 1;
            let found = match s {
                Stmt::If { then_block, else_block, .. } => find(then_block, target, next)
                    .or_else(|| else_block.as_ref().and_then(|b| find(b, target, next))),
                Stmt::While { body, .. } => find(body, target, next),
                _ => None,
            };
            if found.is_some() {
                return found;
            }
        }
        None
    }
    let f = prog.function(function)?;
    let stmt = find(&f.body, node, &mut 0)?;
    let mut out = BTreeSet::new();
    match stmt {
        Stmt::If { cond, .. } | Stmt::While { cond, .. } | Stmt::Assert(cond) => vars(cond, &mut out),
        Stmt::Call { args, .. } => args.iter().for_each(|a| vars(a, &mut out)),
        _ => return None,
    }
    Some(out)
}

pub fn instrumentation_is_invariant(prog: &Program) -> Result<(), String> {
    let analysis = analyze_program(prog, &AnalysisConfig::default());
    let (out, points) = instrument_program(prog, &analysis);
    for p in &points {
        let allowed = anchor_free_vars(prog, &p.function, p.node.0)
            .ok_or_else(|| format!("{p}: anchor is not a loop, conditional, assertion or call\n{prog}"))?;
        let mut used = BTreeSet::new();
        p.emitted.collect_vars(&mut used);
        if !used.is_subset(&allowed) || !p.vars.is_subset(&allowed) {
            return Err(format!("{p}: mentions {used:?}, anchor reads {allowed:?}\n{prog}"));
        }
    }
    equivalent(prog, &out, "instrument")
}

// ---- contractor pairs ----

pub type Point = BTreeMap<Ident, BigInt>;

/// Concrete value of `e` at `p`; `None` on division by zero.
pub fn eval_at(e: &Expr, p: &Point) -> Option<BigInt> {
    Some(match e {
        Expr::Int(v) => v.clone(),
        Expr::Var(v) => p[v].clone(),
        Expr::Unary(UnOp::Neg, a) => -eval_at(a, p)?,
        Expr::Binary(BinOp::Arith(op), l, r) => {
            let (a, b) = (eval_at(l, p)?, eval_at(r, p)?);
            match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div if b.is_zero() => return None,
                // truncation toward zero, spelled out
                ArithOp::Div => {
                    let q = a.magnitude() / b.magnitude();
                    let q = BigInt::from(q);
                    if (a < BigInt::zero()) != (b < BigInt::zero()) {
                        -q
                    } else {
                        q
                    }
                }
            }
        }
        other => panic!("not arithmetic: {other}"),
    })
}

pub fn relation_holds(op: CmpOp, a: &BigInt, b: &BigInt) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
    }
}

/// Whether `c` holds at `p`; points where evaluation traps are no solutions.
pub fn satisfies(c: &Constraint, p: &Point) -> bool {
    match (eval_at(&c.lhs, p), eval_at(&c.rhs, p)) {
        (Some(a), Some(b)) => relation_holds(c.relation, &a, &b),
        _ => false,
    }
}

#[derive(Clone, Debug)]
pub struct Pair {
    pub constraint: Constraint,
    pub box_: BoxN,
}

impl Pair {
    /// Each variable occurs at most once in the constraint.
    pub fn single_occurrence(&self) -> bool {
        let mut seen = BTreeMap::new();
        fn count(e: &Expr, seen: &mut BTreeMap<Ident, usize>) {
            match e {
                Expr::Var(v) => *seen.entry(v.clone()).or_insert(0) += 1,
                Expr::Unary(_, a) => count(a, seen),
                Expr::Binary(_, l, r) => {
                    count(l, seen);
                    count(r, seen);
                }
                _ => {}
            }
        }
        count(&self.constraint.lhs, &mut seen);
        count(&self.constraint.rhs, &mut seen);
        seen.values().all(|&n| n <= 1)
    }
}

fn random_term<R: Rng>(rng: &mut R, depth: usize, vars: &mut Vec<Ident>, reuse: bool, pool: &[Ident]) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        let pick = if reuse { pool.choose(rng).cloned() } else { vars.pop() };
        return match pick {
            Some(v) if rng.gen_bool(0.75) => Expr::Var(v),
            other => {
                if let (Some(v), false) = (other, reuse) {
                    vars.push(v);
                }
                Expr::int(rng.gen_range(-5..=5))
            }
        };
    }
    if rng.gen_bool(0.1) {
        return Expr::neg(random_term(rng, depth - 1, vars, reuse, pool));
    }
    let op = *[ArithOp::Add, ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Mul, ArithOp::Div]
        .choose(rng)
        .unwrap();
    let l = random_term(rng, depth - 1, vars, reuse, pool);
    let r = random_term(rng, depth - 1, vars, reuse, pool);
    Expr::arith(op, l, r)
}

/// A random constraint over up to three variables and a finite box with
/// widths at most 20.
pub fn random_pair<R: Rng>(rng: &mut R, single: bool) -> Pair {
    let n = rng.gen_range(1..=3);
    let pool: Vec<Ident> = ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect();
    let mut vars = pool.clone();
    vars.shuffle(rng);
    let lhs = random_term(rng, 3, &mut vars, !single, &pool);
    let rhs = random_term(rng, 1, &mut vars, !single, &pool);
    let relation = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
    let box_ = BoxN::new(pool.iter().map(|v| {
        let lo = rng.gen_range(-10..=10);
        (v.clone(), Interval::range(lo, lo + rng.gen_range(0..=20)))
    }));
    Pair { constraint: Constraint::new(relation, lhs, rhs), box_ }
}

/// Exact integer hull of the solutions in the box.
pub fn solution_hull(pair: &Pair) -> BoxN {
    let mut hull: Option<BoxN> = None;
    for p in pair.box_.points() {
        if satisfies(&pair.constraint, &p) {
            let b = BoxN::new(p.iter().map(|(v, x)| (v.clone(), Interval::singleton(x.clone()))));
            hull = Some(match hull {
                Some(h) => h.join(&b),
                None => b,
            });
        }
    }
    hull.unwrap_or_else(|| {
        let mut e = pair.box_.clone();
        e.make_empty();
        e
    })
}

/// Which properties of `hc4_revise` fail on `pair`.
#[derive(Clone, Debug, Default)]
pub struct PairOutcome {
    pub contraction: bool,
    pub correctness: bool,
    pub idempotence: bool,
    /// `None` when some variable occurs twice.
    pub optimal: Option<bool>,
    pub result: Option<BoxN>,
    pub hull: Option<BoxN>,
}

impl PairOutcome {
    pub fn sound(&self) -> bool {
        self.contraction && self.correctness && self.idempotence
    }
}

pub fn check_pair(pair: &Pair) -> PairOutcome {
    let out = hc4_revise(&pair.constraint, &pair.box_);
    let contraction = out.leq(&pair.box_);
    let correctness =
        pair.box_.points().iter().all(|p| !satisfies(&pair.constraint, p) || out.contains_point(p));
    let idempotence = hc4_revise(&pair.constraint, &out) == out;
    let hull = solution_hull(pair);
    let optimal = pair.single_occurrence().then(|| out == hull);
    PairOutcome { contraction, correctness, idempotence, optimal, result: Some(out), hull: Some(hull) }
}
