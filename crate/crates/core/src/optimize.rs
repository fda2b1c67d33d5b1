//! Interval-driven rewriting: singleton propagation, guard elimination and
//! constant folding.
//!
//! The rewrites look up analysis states by statement position: statement `k`
//! in pre-order of a function body is node `k` of its graph. Passes that take
//! an analysis must therefore run on the program that was analyzed, or on a
//! rewrite of it that kept every statement in place.

use std::fmt;

use num_traits::Zero;

use crate::absint::{analyze_program, eval_condition, eval_expr, AbstractState, AnalysisConfig, ProgramAnalysis};
use crate::fault::{self, Fault};
use crate::interval::{ArithMode, ArithOp, Truth3};
use crate::lang::{block_len, BinOp, Block, Expr, NodeId, Program, Stmt, UnOp};
use crate::oracle::Site;

/// Upper bound on analyze-and-rewrite rounds in [`optimize_program`].
pub const MAX_ROUNDS: usize = 16;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteReport {
    pub singletons_propagated: usize,
    pub guards_true: usize,
    pub guards_false: usize,
    pub constants_folded: usize,
    pub dead_branches_removed: usize,
    /// Reachable `assert(false)` statements of the output program.
    pub failing_asserts: Vec<Site>,
}

impl RewriteReport {
    pub fn guards_eliminated(&self) -> usize {
        self.guards_true + self.guards_false
    }

    /// Total number of rewrites.
    pub fn changes(&self) -> usize {
        self.singletons_propagated + self.guards_eliminated() + self.constants_folded + self.dead_branches_removed
    }

    pub fn absorb(&mut self, other: &RewriteReport) {
        self.singletons_propagated += other.singletons_propagated;
        self.guards_true += other.guards_true;
        self.guards_false += other.guards_false;
        self.constants_folded += other.constants_folded;
        self.dead_branches_removed += other.dead_branches_removed;
    }
}

impl fmt::Display for RewriteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "singletons propagated: {}", self.singletons_propagated)?;
        writeln!(f, "guards eliminated: {} (true: {}, false: {})", self.guards_eliminated(), self.guards_true, self.guards_false)?;
        writeln!(f, "constants folded: {}", self.constants_folded)?;
        write!(f, "dead branches removed: {}", self.dead_branches_removed)?;
        for s in &self.failing_asserts {
            write!(f, "\nassertion always fails: {s}")?;
        }
        Ok(())
    }
}

fn state_of<'a>(analysis: &'a ProgramAnalysis, function: &str, id: usize) -> Option<&'a AbstractState> {
    analysis.functions.get(function)?.result.before.get(&NodeId(id))
}

/// Walks every function body in pre-order, handing each statement its node
/// number. `f` rewrites the statement's own expressions; nested blocks are
/// visited afterwards.
fn map_statements(prog: &Program, mut f: impl FnMut(&str, usize, &mut Stmt)) -> Program {
    fn walk(function: &str, block: &mut Block, next: &mut usize, f: &mut impl FnMut(&str, usize, &mut Stmt)) {
        for s in block {
            let id = *next;
            *next += 1;
            f(function, id, s);
            match s {
                Stmt::If { then_block, else_block, .. } => {
                    walk(function, then_block, next, f);
                    if let Some(b) = else_block {
                        walk(function, b, next, f);
                    }
                }
                Stmt::While { body, .. } => walk(function, body, next, f),
                _ => {}
            }
        }
    }
    let mut out = prog.clone();
    for func in &mut out.functions {
        let mut next = 0;
        walk(&func.name.clone(), &mut func.body, &mut next, &mut f);
    }
    out
}

fn substitute(e: &Expr, s: &AbstractState, count: &mut usize) -> Expr {
    match e {
        Expr::Var(v) => match s.get(v).singleton_value() {
            Some(c) => {
                *count += 1;
                let c = if fault::active(Fault::SingletonOffByOne) { c + 1 } else { c.clone() };
                Expr::Int(c)
            }
            None => e.clone(),
        },
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(substitute(a, s, count))),
        Expr::Binary(op, l, r) => Expr::binary(*op, substitute(l, s, count), substitute(r, s, count)),
        _ => e.clone(),
    }
}

/// Replaces every variable read whose interval before the statement is a
/// singleton by that constant. Assignment targets are left alone.
pub fn singleton_propagate(prog: &Program, analysis: &ProgramAnalysis) -> (Program, RewriteReport) {
    let mut report = RewriteReport::default();
    let out = map_statements(prog, |function, id, stmt| {
        let Some(s) = state_of(analysis, function, id).filter(|s| !s.is_bottom()) else {
            return;
        };
        let n = &mut report.singletons_propagated;
        match stmt {
            Stmt::Assign { rhs, .. } => *rhs = substitute(rhs, s, n),
            Stmt::Assume(c) | Stmt::Assert(c) | Stmt::Return(c) => *c = substitute(c, s, n),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => *cond = substitute(cond, s, n),
            Stmt::Call { args, .. } => {
                for a in args {
                    *a = substitute(a, s, n);
                }
            }
            Stmt::Skip => {}
        }
    });
    (out, report)
}

/// Whether some division in `e` may see a zero divisor in state `s`.
fn can_trap(e: &Expr, s: &AbstractState, mode: ArithMode) -> bool {
    match e {
        Expr::Binary(op, l, r) => {
            let here = *op == BinOp::DIV && {
                let d = eval_expr(r, s, mode);
                d.is_bottom() || d.contains_zero()
            };
            here || can_trap(l, s, mode) || can_trap(r, s, mode)
        }
        Expr::Unary(_, a) => can_trap(a, s, mode),
        _ => false,
    }
}

struct Guards<'a> {
    config: &'a AnalysisConfig,
    report: RewriteReport,
}

impl Guards<'_> {
    fn verdict(&self, c: &Expr, s: &AbstractState) -> Truth3 {
        let mode = self.config.arith_mode();
        if self.config.use_contractors {
            let v = self.config.contractor().classify_condition(c, &s.to_box()).verdict;
            if v != Truth3::Maybe {
                return v;
            }
        }
        eval_condition(c, s, mode)
    }

    /// A literal for `c` if it is decided in `s` and evaluating it cannot trap.
    fn decide(&self, c: &Expr, s: &AbstractState, hint: Truth3) -> Option<bool> {
        if matches!(c, Expr::Bool(_)) || can_trap(c, s, self.config.arith_mode()) {
            return None;
        }
        let v = match self.verdict(c, s) {
            Truth3::Maybe => hint,
            v => v,
        };
        v.as_bool()
    }

    fn literal(&mut self, b: bool) -> Expr {
        if b {
            self.report.guards_true += 1;
        } else {
            self.report.guards_false += 1;
        }
        Expr::Bool(b)
    }

    /// Resolves `c` as a whole, else its boolean operands, then the result
    /// once more.
    fn resolve(&mut self, c: &Expr, s: &AbstractState, hint: Truth3) -> Expr {
        if let Some(b) = self.decide(c, s, hint) {
            return self.literal(b);
        }
        let inner = match c {
            Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => {
                Expr::binary(*op, self.resolve(l, s, Truth3::Maybe), self.resolve(r, s, Truth3::Maybe))
            }
            Expr::Unary(UnOp::Not, a) => Expr::not(self.resolve(a, s, Truth3::Maybe)),
            _ => return c.clone(),
        };
        if inner != *c {
            if let Some(b) = self.decide(&inner, s, Truth3::Maybe) {
                return self.literal(b);
            }
        }
        inner
    }
}

/// What the branch states say about a condition: False when the true edge is
/// unreachable, True when the false edge is.
fn branch_hint(analysis: &ProgramAnalysis, function: &str, id: usize) -> Truth3 {
    let Some((t, f)) = analysis.functions.get(function).and_then(|a| a.result.branches.get(&NodeId(id))) else {
        return Truth3::Maybe;
    };
    match (t.is_bottom(), f.is_bottom()) {
        (true, false) => Truth3::False,
        (false, true) => Truth3::True,
        _ => Truth3::Maybe,
    }
}

/// Replaces conditions that hold (or fail) in every state reaching them by
/// literals, then drops the branches those literals make dead.
pub fn guard_eliminate(prog: &Program, analysis: &ProgramAnalysis) -> (Program, RewriteReport) {
    let mut g = Guards { config: &analysis.config, report: RewriteReport::default() };
    let resolved = map_statements(prog, |function, id, stmt| {
        let Some(s) = state_of(analysis, function, id).filter(|s| !s.is_bottom()) else {
            return;
        };
        match stmt {
            Stmt::Assume(c) | Stmt::Assert(c) => *c = g.resolve(c, s, Truth3::Maybe),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => {
                *cond = g.resolve(cond, s, branch_hint(analysis, function, id));
            }
            _ => {}
        }
    });
    let mut report = g.report;
    let out = drop_dead_branches(&resolved, &mut report);
    (out, report)
}

/// Flattens `if` statements with literal conditions and removes
/// `while (false)` loops. Each counts as one removed branch.
fn drop_dead_branches(prog: &Program, report: &mut RewriteReport) -> Program {
    fn block(b: &Block, report: &mut RewriteReport) -> Block {
        let mut out = Vec::with_capacity(b.len());
        for s in b {
            match s {
                Stmt::If { cond: Expr::Bool(c), then_block, else_block } => {
                    let c = *c != fault::active(Fault::GuardKeepsWrongBranch);
                    let live = if c { Some(then_block) } else { else_block.as_ref() };
                    report.dead_branches_removed += 1;
                    if let Some(live) = live {
                        out.extend(block(live, report));
                    }
                }
                Stmt::While { cond: Expr::Bool(false), .. } => report.dead_branches_removed += 1,
                Stmt::If { cond, then_block, else_block } => out.push(Stmt::If {
                    cond: cond.clone(),
                    then_block: block(then_block, report),
                    else_block: else_block.as_ref().map(|b| block(b, report)),
                }),
                Stmt::While { cond, body } => out.push(Stmt::While { cond: cond.clone(), body: block(body, report) }),
                other => out.push(other.clone()),
            }
        }
        out
    }
    let mut out = prog.clone();
    for f in &mut out.functions {
        f.body = block(&f.body, report);
    }
    out
}

fn fold_expr(e: &Expr, count: &mut usize) -> Expr {
    let folded = match e {
        Expr::Unary(op, a) => {
            let a = fold_expr(a, count);
            match (op, &a) {
                (UnOp::Neg, Expr::Int(v)) => Some(Expr::Int(-v)),
                (UnOp::Not, Expr::Bool(b)) => Some(Expr::Bool(!b)),
                _ => return Expr::Unary(*op, Box::new(a)),
            }
        }
        Expr::Binary(op, l, r) => {
            let l = fold_expr(l, count);
            let r = fold_expr(r, count);
            match fold_binary(*op, &l, &r) {
                Some(v) => Some(v),
                None => return Expr::binary(*op, l, r),
            }
        }
        _ => None,
    };
    match folded {
        Some(v) => {
            *count += 1;
            v
        }
        None => e.clone(),
    }
}

fn fold_binary(op: BinOp, l: &Expr, r: &Expr) -> Option<Expr> {
    match (op, l, r) {
        (BinOp::Arith(a), Expr::Int(x), Expr::Int(y)) => Some(Expr::Int(match a {
            ArithOp::Add => x + y,
            ArithOp::Sub if fault::active(Fault::ConstFoldSubSwapped) => y - x,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div if y.is_zero() => return None,
            ArithOp::Div => x / y,
        })),
        (BinOp::Cmp(c), Expr::Int(x), Expr::Int(y)) => Some(Expr::Bool(c.holds(x, y))),
        // Both operands of && and || are always evaluated, so a side can
        // only be dropped when it cannot trap.
        (BinOp::And, Expr::Bool(true), c) | (BinOp::And, c, Expr::Bool(true)) => Some(c.clone()),
        (BinOp::Or, Expr::Bool(false), c) | (BinOp::Or, c, Expr::Bool(false)) => Some(c.clone()),
        (BinOp::And, Expr::Bool(false), c) | (BinOp::And, c, Expr::Bool(false)) if !c.may_trap() => {
            Some(Expr::Bool(false))
        }
        (BinOp::Or, Expr::Bool(true), c) | (BinOp::Or, c, Expr::Bool(true)) if !c.may_trap() => {
            Some(Expr::Bool(true))
        }
        _ => None,
    }
}

/// Folds literal subexpressions and boolean identities, leaving division by
/// zero in place, and drops the branches made dead by literal conditions.
pub fn const_fold(prog: &Program) -> (Program, RewriteReport) {
    let mut report = RewriteReport::default();
    let folded = map_statements(prog, |_, _, stmt| {
        let n = &mut report.constants_folded;
        match stmt {
            Stmt::Assign { rhs, .. } => *rhs = fold_expr(rhs, n),
            Stmt::Assume(c) | Stmt::Assert(c) | Stmt::Return(c) => *c = fold_expr(c, n),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => *cond = fold_expr(cond, n),
            Stmt::Call { args, .. } => {
                for a in args {
                    *a = fold_expr(a, n);
                }
            }
            Stmt::Skip => {}
        }
    });
    let out = drop_dead_branches(&folded, &mut report);
    (out, report)
}

/// Reachable `assert(false)` statements.
fn failing_asserts(prog: &Program, analysis: &ProgramAnalysis) -> Vec<Site> {
    let mut out = Vec::new();
    map_statements(prog, |function, id, stmt| {
        if *stmt == Stmt::Assert(Expr::Bool(false))
            && state_of(analysis, function, id).is_some_and(|s| !s.is_bottom())
        {
            out.push(Site { function: function.to_string(), node: NodeId(id) });
        }
    });
    out
}

/// One round: analyze, propagate singletons, eliminate guards, fold.
pub fn optimize_once(prog: &Program, config: &AnalysisConfig) -> (Program, RewriteReport) {
    let analysis = analyze_program(prog, config);
    let (p1, r1) = singleton_propagate(prog, &analysis);
    let (p2, r2) = guard_eliminate(&p1, &analysis);
    let (p3, r3) = const_fold(&p2);
    let mut report = r1;
    report.absorb(&r2);
    report.absorb(&r3);
    (p3, report)
}

/// Repeats [`optimize_once`] until a round changes nothing, so that the
/// result is stable under another call.
pub fn optimize_program(prog: &Program, config: &AnalysisConfig) -> (Program, RewriteReport) {
    let mut report = RewriteReport::default();
    let mut current = prog.clone();
    for _ in 0..MAX_ROUNDS {
        let (next, r) = optimize_once(&current, config);
        if r.changes() == 0 {
            break;
        }
        report.absorb(&r);
        current = next;
    }
    report.failing_asserts = failing_asserts(&current, &analyze_program(&current, config));
    (current, report)
}

/// Number of statements in the program.
pub fn program_size(prog: &Program) -> usize {
    prog.functions.iter().map(|f| block_len(&f.body)).sum()
}
