//! Random well-formed programs for fuzzing and benchmarks.
//!
//! Generated programs only use bounded `nondet`, keep loops counter-driven
//! (with the occasional free-running one that the step limit cuts off), and
//! never recurse, so the oracle can enumerate them.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::interval::{ArithOp, CmpOp};
use crate::lang::{Block, Expr, Function, Ident, Program, Stmt, ENTRY};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    /// Variables per function, parameters included.
    pub max_vars: usize,
    pub nondet_lo: i64,
    pub nondet_hi: i64,
    pub max_loop_depth: usize,
    /// Largest trip count of a counter loop.
    pub max_trip: i64,
    pub max_block_len: usize,
    pub max_helpers: usize,
    pub max_expr_depth: usize,
    /// Upper bound on `nondet` calls outside loops; keeps the number of
    /// executions small.
    pub max_nondets: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_vars: 3,
            nondet_lo: -4,
            nondet_hi: 4,
            max_loop_depth: 2,
            max_trip: 5,
            max_block_len: 4,
            max_helpers: 2,
            max_expr_depth: 2,
            max_nondets: 3,
        }
    }
}

struct Helper {
    name: Ident,
    arity: usize,
}

struct FnGen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    vars: Vec<Ident>,
    helpers: &'a [Helper],
    nondets: usize,
    /// Loop counters of the enclosing loops; bodies never assign them. Free
    /// running loops push an empty name.
    counters: Vec<Ident>,
    budget: usize,
}

impl<R: Rng> FnGen<'_, R> {
    fn var(&mut self) -> Ident {
        self.vars.choose(self.rng).expect("at least one variable").clone()
    }

    fn writable(&mut self) -> Option<Ident> {
        let free: Vec<&Ident> = self.vars.iter().filter(|v| !self.counters.contains(v)).collect();
        free.choose(self.rng).map(|v| (*v).clone())
    }

    fn constant(&mut self) -> Expr {
        Expr::int(self.rng.gen_range(-5..=5))
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.6) { Expr::Var(self.var()) } else { self.constant() };
        }
        if self.rng.gen_bool(0.1) {
            return Expr::neg(self.expr(depth - 1));
        }
        let op = *[ArithOp::Add, ArithOp::Add, ArithOp::Sub, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]
            .choose(self.rng)
            .unwrap();
        let l = self.expr(depth - 1);
        // small literal factors keep products from exploding in loops
        let r = if matches!(op, ArithOp::Mul) && self.rng.gen_bool(0.7) {
            Expr::int(self.rng.gen_range(-3..=3))
        } else {
            self.expr(depth - 1)
        };
        Expr::arith(op, l, r)
    }

    fn comparison(&mut self) -> Expr {
        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(self.rng).unwrap();
        let depth = self.cfg.max_expr_depth;
        let l = self.expr(depth);
        let r = if self.rng.gen_bool(0.5) { self.constant() } else { self.expr(depth - 1) };
        Expr::cmp(op, l, r)
    }

    fn condition(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.6) {
            return self.comparison();
        }
        match self.rng.gen_range(0..5) {
            0 => Expr::not(self.condition(depth - 1)),
            1 | 2 => Expr::and(self.condition(depth - 1), self.condition(depth - 1)),
            _ => Expr::or(self.condition(depth - 1), self.condition(depth - 1)),
        }
    }

    fn nondet(&mut self) -> Expr {
        let lo = self.rng.gen_range(self.cfg.nondet_lo..=self.cfg.nondet_hi);
        let hi = self.rng.gen_range(lo..=self.cfg.nondet_hi);
        Expr::nondet(lo, hi)
    }

    fn stmt(&mut self) -> Option<Stmt> {
        self.budget = self.budget.checked_sub(1)?;
        let in_loop = !self.counters.is_empty();
        Some(match self.rng.gen_range(0..20) {
            0..=6 => {
                let target = self.writable()?;
                let rhs = if !in_loop && self.nondets < self.cfg.max_nondets && self.rng.gen_bool(0.35) {
                    self.nondets += 1;
                    self.nondet()
                } else {
                    self.expr(self.cfg.max_expr_depth)
                };
                Stmt::Assign { target, rhs }
            }
            7..=9 => {
                let cond = self.condition(1);
                let then_block = self.block();
                let else_block = if self.rng.gen_bool(0.5) { Some(self.block()) } else { None };
                Stmt::If { cond, then_block, else_block }
            }
            10..=12 if self.counters.len() < self.cfg.max_loop_depth => return self.counter_loop(),
            13 if self.counters.len() < self.cfg.max_loop_depth && self.rng.gen_bool(0.2) => {
                // may run until the step limit
                let cond = self.condition(1);
                self.counters.push(String::new());
                let body = self.block();
                self.counters.pop();
                Stmt::While { cond, body }
            }
            14 | 15 => Stmt::Assert(self.condition(1)),
            16 => Stmt::Assume(self.condition(1)),
            17 | 18 if !self.helpers.is_empty() => {
                let h = self.helpers.choose(self.rng).unwrap();
                let (callee, arity) = (h.name.clone(), h.arity);
                let args = (0..arity).map(|_| self.expr(1)).collect();
                let result = if self.rng.gen_bool(0.7) { self.writable() } else { None };
                Stmt::Call { callee, args, result }
            }
            _ => Stmt::Skip,
        })
    }

    /// `c = k; while (c < n) { ...; c = c + step; }` with a counter the body
    /// never writes.
    fn counter_loop(&mut self) -> Option<Stmt> {
        let c = self.writable()?;
        let start = self.rng.gen_range(-2..=1);
        let end = start + self.rng.gen_range(0..=self.cfg.max_trip);
        let step = if self.rng.gen_bool(0.8) { 1 } else { 2 };
        self.counters.push(c.clone());
        let mut body = self.block();
        self.counters.pop();
        body.push(Stmt::assign(&c, Expr::arith(ArithOp::Add, Expr::var(&c), Expr::int(step))));
        let op = if self.rng.gen_bool(0.8) { CmpOp::Lt } else { CmpOp::Le };
        let while_stmt = Stmt::While { cond: Expr::cmp(op, Expr::var(&c), Expr::int(end)), body };
        // wrap the initialization and loop in an always-true if so the pair
        // stays one statement
        Some(Stmt::If {
            cond: Expr::Bool(true),
            then_block: vec![Stmt::assign(&c, Expr::int(start)), while_stmt],
            else_block: None,
        })
    }

    fn block(&mut self) -> Block {
        let n = self.rng.gen_range(1..=self.cfg.max_block_len);
        (0..n).filter_map(|_| self.stmt()).collect()
    }
}

fn function<R: Rng>(
    rng: &mut R,
    cfg: &GenConfig,
    name: &str,
    params: Vec<Ident>,
    helpers: &[Helper],
    with_return: bool,
) -> Function {
    let extra = rng.gen_range(usize::from(params.is_empty())..=cfg.max_vars.saturating_sub(params.len()).max(1));
    let locals: Vec<Ident> = ["x", "y", "z", "w", "v"].iter().take(extra).map(|s| s.to_string()).collect();
    let vars: Vec<Ident> = params.iter().chain(&locals).cloned().collect();
    // helpers may be called in loops, so only main draws nondet values
    let nondets = if with_return { cfg.max_nondets } else { 0 };
    let mut g = FnGen { rng, cfg, vars, helpers, nondets, counters: Vec::new(), budget: 12 };
    let mut body = g.block();
    if g.rng.gen_bool(0.5) {
        let c = g.condition(1);
        body.push(Stmt::Assert(c));
    }
    if with_return {
        let e = g.expr(1);
        body.push(Stmt::Return(e));
    }
    Function { name: name.to_string(), params, locals, body }
}

/// A random program from `rng`.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Program {
    let n_helpers = rng.gen_range(0..=cfg.max_helpers);
    let mut helpers = Vec::new();
    let mut functions = Vec::new();
    for k in 0..n_helpers {
        let arity = rng.gen_range(0..=2usize.min(cfg.max_vars));
        let params: Vec<Ident> = ["a", "b"].iter().take(arity).map(|s| s.to_string()).collect();
        let name = format!("h{k}");
        // helpers only call earlier helpers, so there is no recursion
        functions.push(function(rng, cfg, &name, params, &helpers, true));
        helpers.push(Helper { name, arity });
    }
    functions.push(function(rng, cfg, ENTRY, Vec::new(), &helpers, false));
    Program { functions, entry: ENTRY.to_string() }
}

/// The `index`-th program of the stream for `seed`.
pub fn program_from_seed(seed: u64, index: u64, cfg: &GenConfig) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    random_program(&mut rng, cfg)
}
