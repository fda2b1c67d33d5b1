//! Exhaustive concrete execution over bounded nondeterminism.
//!
//! Every execution is identified by the sequence of values its `nondet`
//! calls returned. Sequences are enumerated depth-first in lexicographic
//! order, so the set of executions of a program is a pure function of the
//! program and the limits.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::absint::ProgramAnalysis;
use crate::interval::{ArithOp, Interval};
use crate::lang::{build_cfg, BinOp, Cfg, EdgeLabel, Expr, Ident, NodeId, NodeKind, Program, UnOp};

pub const DEFAULT_STEP_LIMIT: usize = 10_000;
pub const DEFAULT_MAX_EXECUTIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Nodes executed per run, calls included.
    pub step_limit: usize,
    pub max_executions: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { step_limit: DEFAULT_STEP_LIMIT, max_executions: DEFAULT_MAX_EXECUTIONS }
    }
}

/// A node of a particular function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub function: Ident,
    pub node: NodeId,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.function, self.node)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Ok,
    AssertFailed(Site),
    AssumeInfeasible,
    DivByZero(Site),
    StepLimit,
}

/// A verdict without its location, for comparing different programs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VerdictKind {
    Ok,
    AssertFailed,
    AssumeInfeasible,
    DivByZero,
    StepLimit,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Ok => VerdictKind::Ok,
            Verdict::AssertFailed(_) => VerdictKind::AssertFailed,
            Verdict::AssumeInfeasible => VerdictKind::AssumeInfeasible,
            Verdict::DivByZero(_) => VerdictKind::DivByZero,
            Verdict::StepLimit => VerdictKind::StepLimit,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Ok => f.write_str("ok"),
            Verdict::AssertFailed(s) => write!(f, "assert-failed({s})"),
            Verdict::AssumeInfeasible => f.write_str("assume-infeasible"),
            Verdict::DivByZero(s) => write!(f, "div-by-zero({s})"),
            Verdict::StepLimit => f.write_str("step-limit"),
        }
    }
}

pub type Env = BTreeMap<Ident, BigInt>;

/// The environment of the current frame on entry to a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub site: Site,
    pub env: Env,
}

/// One complete run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteState {
    /// Values returned by the `nondet` calls, in order.
    pub choices: Vec<BigInt>,
    /// Final environment of the entry function.
    pub env: Env,
    pub trace: Vec<TraceEntry>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unbounded nondet in function `{function}`: {expr}")]
    UnboundedNondet { function: Ident, expr: String },
    #[error("more than {0} executions")]
    TooManyExecutions(usize),
    #[error("the programs draw different nondet values after choices {choices:?}")]
    NondetMismatch { choices: Vec<BigInt> },
}

enum Stop {
    Verdict(Verdict),
    /// A replayed run asked for a choice that was not scripted, or for one
    /// with different bounds.
    OffScript,
}

struct Chooser {
    script: Vec<(BigInt, BigInt, BigInt)>,
    pos: usize,
    /// Replay mode: never extend the script.
    fixed: bool,
}

impl Chooser {
    fn choose(&mut self, lo: &BigInt, hi: &BigInt) -> Result<BigInt, Stop> {
        if let Some((v, l, h)) = self.script.get(self.pos) {
            if l != lo || h != hi {
                return Err(Stop::OffScript);
            }
            self.pos += 1;
            return Ok(v.clone());
        }
        if self.fixed {
            return Err(Stop::OffScript);
        }
        self.script.push((lo.clone(), lo.clone(), hi.clone()));
        self.pos += 1;
        Ok(lo.clone())
    }

    /// Advances to the next script in lexicographic order.
    fn advance(&mut self) -> bool {
        self.script.truncate(self.pos);
        while let Some((v, _, h)) = self.script.last_mut() {
            if *v < *h {
                *v += 1;
                self.pos = 0;
                return true;
            }
            self.script.pop();
        }
        false
    }
}

struct Machine<'a> {
    cfgs: &'a BTreeMap<Ident, Cfg>,
    step_limit: usize,
    steps: usize,
    frames: Vec<Env>,
    trace: Option<Vec<TraceEntry>>,
    chooser: Chooser,
}

fn truth(b: bool) -> Result<bool, Stop> {
    Ok(b)
}

impl Machine<'_> {
    fn env(&mut self) -> &mut Env {
        self.frames.last_mut().expect("active frame")
    }

    fn eval(&mut self, e: &Expr, site: &Site) -> Result<BigInt, Stop> {
        Ok(match e {
            Expr::Int(v) => v.clone(),
            Expr::Var(v) => self.env()[v].clone(),
            Expr::Nondet(Some(lo), Some(hi)) => self.chooser.choose(lo, hi)?,
            Expr::Nondet(..) => unreachable!("unbounded nondet is rejected before running"),
            Expr::Unary(UnOp::Neg, a) => -self.eval(a, site)?,
            Expr::Binary(BinOp::Arith(op), l, r) => {
                let a = self.eval(l, site)?;
                let b = self.eval(r, site)?;
                match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div if b.is_zero() => return Err(Stop::Verdict(Verdict::DivByZero(site.clone()))),
                    // BigInt division truncates toward zero
                    ArithOp::Div => a / b,
                }
            }
            other => panic!("not an arithmetic expression: {other}"),
        })
    }

    /// Both operands of `&&` and `||` are always evaluated.
    fn eval_cond(&mut self, c: &Expr, site: &Site) -> Result<bool, Stop> {
        match c {
            Expr::Bool(b) => truth(*b),
            Expr::Unary(UnOp::Not, a) => Ok(!self.eval_cond(a, site)?),
            Expr::Binary(BinOp::And, l, r) => {
                let a = self.eval_cond(l, site)?;
                let b = self.eval_cond(r, site)?;
                Ok(a && b)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let a = self.eval_cond(l, site)?;
                let b = self.eval_cond(r, site)?;
                Ok(a || b)
            }
            Expr::Binary(BinOp::Cmp(op), l, r) => {
                let a = self.eval(l, site)?;
                let b = self.eval(r, site)?;
                Ok(op.holds(&a, &b))
            }
            other => panic!("not a condition: {other}"),
        }
    }

    fn call(&mut self, function: &str, args: Vec<BigInt>) -> Result<BigInt, Stop> {
        let cfg = &self.cfgs[function];
        let mut env: Env = cfg.variables.iter().map(|v| (v.clone(), BigInt::zero())).collect();
        for (p, a) in cfg.params.iter().zip(args) {
            env.insert(p.clone(), a);
        }
        self.frames.push(env);
        let mut ret = BigInt::zero();
        let mut node = cfg.entry;
        loop {
            let site = Site { function: cfg.function.clone(), node };
            if let Some(t) = &mut self.trace {
                t.push(TraceEntry { site: site.clone(), env: self.frames.last().expect("frame").clone() });
            }
            self.steps += 1;
            if self.steps > self.step_limit {
                return Err(Stop::Verdict(Verdict::StepLimit));
            }
            let mut label = EdgeLabel::Fallthrough;
            match cfg.node(node) {
                NodeKind::Assign { target, rhs } => {
                    let v = self.eval(rhs, &site)?;
                    self.env().insert(target.clone(), v);
                }
                NodeKind::Assume(c) => {
                    if !self.eval_cond(c, &site)? {
                        return Err(Stop::Verdict(Verdict::AssumeInfeasible));
                    }
                }
                NodeKind::Assert(c) => {
                    if !self.eval_cond(c, &site)? {
                        return Err(Stop::Verdict(Verdict::AssertFailed(site)));
                    }
                }
                NodeKind::Call { callee, args, result } => {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(self.eval(a, &site)?);
                    }
                    let v = self.call(callee, vals)?;
                    if let Some(r) = result {
                        self.env().insert(r.clone(), v);
                    }
                }
                NodeKind::Return(e) => ret = self.eval(e, &site)?,
                NodeKind::Skip => {}
                NodeKind::Branch { cond, .. } => {
                    label = if self.eval_cond(cond, &site)? { EdgeLabel::True } else { EdgeLabel::False };
                }
                NodeKind::Exit => {
                    // the entry frame stays as the final environment
                    if self.frames.len() > 1 {
                        self.frames.pop();
                    }
                    return Ok(ret);
                }
            }
            node = cfg.successor(node, label).expect("every non-exit node has a successor");
        }
    }
}

fn check_bounded(prog: &Program) -> Result<(), OracleError> {
    for f in &prog.functions {
        let mut bad = None;
        let probe = Program { functions: vec![f.clone()], entry: prog.entry.clone() };
        probe.for_each_expr(|e| {
            find_unbounded(e, &mut bad);
        });
        if let Some(expr) = bad {
            return Err(OracleError::UnboundedNondet { function: f.name.clone(), expr });
        }
    }
    Ok(())
}

fn find_unbounded(e: &Expr, out: &mut Option<String>) {
    match e {
        Expr::Nondet(lo, hi) if lo.is_none() || hi.is_none() => {
            out.get_or_insert_with(|| e.to_string());
        }
        Expr::Unary(_, a) => find_unbounded(a, out),
        Expr::Binary(_, l, r) => {
            find_unbounded(l, out);
            find_unbounded(r, out);
        }
        _ => {}
    }
}

/// A prepared program: graphs for every function.
pub struct Executor {
    cfgs: BTreeMap<Ident, Cfg>,
    entry: Ident,
    config: OracleConfig,
}

impl Executor {
    pub fn new(prog: &Program, config: OracleConfig) -> Result<Self, OracleError> {
        check_bounded(prog)?;
        let cfgs = prog.functions.iter().map(|f| (f.name.clone(), build_cfg(f))).collect();
        Ok(Executor { cfgs, entry: prog.entry.clone(), config })
    }

    pub fn cfg(&self, function: &str) -> Option<&Cfg> {
        self.cfgs.get(function)
    }

    /// One run under `chooser`. `None` when a replayed run leaves its script.
    fn run(&self, chooser: Chooser, with_trace: bool) -> (Option<ConcreteState>, Chooser) {
        let mut m = Machine {
            cfgs: &self.cfgs,
            step_limit: self.config.step_limit,
            steps: 0,
            frames: Vec::new(),
            trace: with_trace.then(Vec::new),
            chooser,
        };
        let verdict = match m.call(&self.entry, Vec::new()) {
            Ok(_) => Verdict::Ok,
            Err(Stop::Verdict(v)) => v,
            Err(Stop::OffScript) => return (None, m.chooser),
        };
        let env = m.frames.into_iter().next().unwrap_or_default();
        let choices = m.chooser.script[..m.chooser.pos].iter().map(|c| c.0.clone()).collect();
        (Some(ConcreteState { choices, env, trace: m.trace.unwrap_or_default(), verdict }), m.chooser)
    }

    /// Runs every execution in order, handing each to `visit` together with
    /// the bounds of every choice it drew. Returns the number of executions.
    fn enumerate(
        &self,
        with_trace: bool,
        mut visit: impl FnMut(&ConcreteState, &[(BigInt, BigInt, BigInt)]) -> Result<(), OracleError>,
    ) -> Result<usize, OracleError> {
        let mut chooser = Chooser { script: Vec::new(), pos: 0, fixed: false };
        let mut count = 0;
        loop {
            if count == self.config.max_executions {
                return Err(OracleError::TooManyExecutions(self.config.max_executions));
            }
            let (state, mut next) = self.run(chooser, with_trace);
            let state = state.expect("free runs extend their script");
            count += 1;
            visit(&state, &next.script[..next.pos])?;
            if !next.advance() {
                return Ok(count);
            }
            chooser = next;
        }
    }

    /// Runs every execution in order. Returns the number of executions.
    pub fn for_each(&self, with_trace: bool, mut visit: impl FnMut(&ConcreteState)) -> Result<usize, OracleError> {
        self.enumerate(with_trace, |s, _| {
            visit(s);
            Ok(())
        })
    }

    /// Runs the single execution whose choices are exactly `choices`, given
    /// as `(value, lo, hi)`. `None` if the program draws anything else.
    pub fn replay(&self, choices: &[(BigInt, BigInt, BigInt)], with_trace: bool) -> Option<ConcreteState> {
        let chooser = Chooser { script: choices.to_vec(), pos: 0, fixed: true };
        let (state, chooser) = self.run(chooser, with_trace);
        state.filter(|_| chooser.pos == choices.len())
    }
}

pub fn enumerate_executions(prog: &Program, config: &OracleConfig) -> Result<Vec<ConcreteState>, OracleError> {
    let exec = Executor::new(prog, *config)?;
    let mut out = Vec::new();
    exec.for_each(true, |s| out.push(s.clone()))?;
    Ok(out)
}

/// A concrete value outside the interval computed for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub site: Site,
    /// `None` when the node was reached but its state is Bottom.
    pub var: Option<Ident>,
    pub value: Option<BigInt>,
    pub interval: Interval,
    pub choices: Vec<BigInt>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.var, &self.value) {
            (Some(v), Some(x)) => {
                write!(f, "{}: {v} = {x} outside {} (choices {:?})", self.site, self.interval, self.choices)
            }
            _ => write!(f, "{}: reached but analyzed as unreachable (choices {:?})", self.site, self.choices),
        }
    }
}

fn check_entry(entry: &TraceEntry, analysis: &ProgramAnalysis, choices: &[BigInt], out: &mut Vec<Violation>) {
    let Some(state) = analysis.functions.get(&entry.site.function).and_then(|f| f.result.before.get(&entry.site.node))
    else {
        return;
    };
    if state.is_bottom() {
        out.push(Violation {
            site: entry.site.clone(),
            var: None,
            value: None,
            interval: Interval::bottom(),
            choices: choices.to_vec(),
        });
        return;
    }
    for (v, x) in &entry.env {
        let i = state.get(v);
        if !i.contains(x) {
            out.push(Violation {
                site: entry.site.clone(),
                var: Some(v.clone()),
                value: Some(x.clone()),
                interval: i.clone(),
                choices: choices.to_vec(),
            });
        }
    }
}

/// Checks several analyses of the same program against one enumeration.
pub fn check_soundness_all(
    prog: &Program,
    analyses: &[&ProgramAnalysis],
    config: &OracleConfig,
) -> Result<Vec<Vec<Violation>>, OracleError> {
    let exec = Executor::new(prog, *config)?;
    let mut out = vec![Vec::new(); analyses.len()];
    exec.for_each(true, |s| {
        for entry in &s.trace {
            for (a, v) in analyses.iter().zip(out.iter_mut()) {
                check_entry(entry, a, &s.choices, v);
            }
        }
    })?;
    Ok(out)
}

/// Every concrete environment reached at a node must lie in the state
/// computed before that node.
pub fn check_soundness(
    prog: &Program,
    analysis: &ProgramAnalysis,
    config: &OracleConfig,
) -> Result<Vec<Violation>, OracleError> {
    Ok(check_soundness_all(prog, &[analysis], config)?.pop().expect("one analysis"))
}

/// What a run looks like from outside: how it ended and the final values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub verdict: VerdictKind,
    pub env: Env,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub choices: Vec<BigInt>,
    pub left: Outcome,
    pub right: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    /// Number of executions compared (runs hitting the step limit on either
    /// side are skipped).
    Equivalent { compared: usize, skipped: usize },
    Different(Box<Counterexample>),
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        matches!(self, Equivalence::Equivalent { .. })
    }
}

fn outcome(s: &ConcreteState, common: &[Ident]) -> Outcome {
    let env = common.iter().filter_map(|v| s.env.get(v).map(|x| (v.clone(), x.clone()))).collect();
    Outcome { verdict: s.verdict.kind(), env }
}

/// Runs both programs on every choice sequence of `a` and compares verdicts
/// and the final values of the entry-function variables they share.
pub fn check_equivalence(a: &Program, b: &Program, config: &OracleConfig) -> Result<Equivalence, OracleError> {
    let ea = Executor::new(a, *config)?;
    let eb = Executor::new(b, *config)?;
    let vars = |p: &Program| -> Vec<Ident> { p.entry_function().variables().cloned().collect() };
    let vb = vars(b);
    let common: Vec<Ident> = vars(a).into_iter().filter(|v| vb.contains(v)).collect();
    let (mut compared, mut skipped) = (0, 0);
    let mut found = None;
    ea.enumerate(false, |sa, script| {
        if found.is_some() {
            return Ok(());
        }
        let sb = eb.replay(script, false);
        let limited = sa.verdict == Verdict::StepLimit;
        let Some(sb) = sb else {
            if limited {
                skipped += 1;
                return Ok(());
            }
            return Err(OracleError::NondetMismatch { choices: sa.choices.clone() });
        };
        if limited || sb.verdict == Verdict::StepLimit {
            skipped += 1;
            return Ok(());
        }
        let (left, right) = (outcome(sa, &common), outcome(&sb, &common));
        if left != right {
            found = Some(Counterexample { choices: sa.choices.clone(), left, right });
        }
        compared += 1;
        Ok(())
    })?;
    Ok(match found {
        Some(c) => Equivalence::Different(Box::new(c)),
        None => Equivalence::Equivalent { compared, skipped },
    })
}
