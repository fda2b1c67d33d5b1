//! Worklist interval analysis over control-flow graphs.
//!
//! The ascending phase joins at ordinary nodes and, at loop heads, joins the
//! incoming state with the stored one and switches to widening once the head
//! has changed `widening_delay` times. A fixed number of descending passes
//! with narrowing at loop heads follows. Calls are not followed: callee
//! parameters start at Top and call results are Top.

mod state;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use state::AbstractState;

use crate::contractor::{Contractor, Formula};
use crate::fault::{self, Fault};
use crate::interval::{interval_binop_mode, eval_cmp, ArithMode, CmpOp, ExtInt, Interval, Truth3};
use crate::lang::{build_cfg, BinOp, Cfg, EdgeLabel, Expr, Function, Ident, NodeId, NodeKind, Program, UnOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AnalysisConfig {
    pub widening_delay: usize,
    pub narrowing_passes: usize,
    pub interval_arith: bool,
    pub use_contractors: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { widening_delay: 2, narrowing_passes: 2, interval_arith: true, use_contractors: true }
    }
}

impl AnalysisConfig {
    pub fn arith_mode(&self) -> ArithMode {
        if self.interval_arith {
            ArithMode::Precise
        } else {
            ArithMode::Extrapolate
        }
    }

    pub fn contractor(&self) -> Contractor {
        Contractor::with_mode(self.arith_mode())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no node {0} in the analyzed graph")]
    UnknownNode(NodeId),
    #[error("no function `{0}` in the program")]
    UnknownFunction(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisResult {
    pub before: BTreeMap<NodeId, AbstractState>,
    /// For branch nodes, the join of both outgoing states.
    pub after: BTreeMap<NodeId, AbstractState>,
    /// Outgoing states of branch nodes along their true and false edges.
    pub branches: BTreeMap<NodeId, (AbstractState, AbstractState)>,
    /// Node evaluations over all phases.
    pub iterations: usize,
    /// Changes of a before-state during the ascending phase.
    pub ascending_updates: usize,
    pub widened_nodes: BTreeSet<NodeId>,
    /// Whether the descending phase broke the post-fixpoint property and the
    /// ascending phase had to be resumed.
    pub repaired: bool,
}

impl AnalysisResult {
    pub fn state_at(&self, node: NodeId, pos: Position) -> Result<&AbstractState, AnalysisError> {
        let map = match pos {
            Position::Before => &self.before,
            Position::After => &self.after,
        };
        map.get(&node).ok_or(AnalysisError::UnknownNode(node))
    }

    /// The state leaving `node` along `label`.
    pub fn edge_state(&self, node: NodeId, label: EdgeLabel) -> Result<&AbstractState, AnalysisError> {
        match label {
            EdgeLabel::Fallthrough => self.state_at(node, Position::After),
            EdgeLabel::True => self.branches.get(&node).map(|b| &b.0).ok_or(AnalysisError::UnknownNode(node)),
            EdgeLabel::False => self.branches.get(&node).map(|b| &b.1).ok_or(AnalysisError::UnknownNode(node)),
        }
    }
}

pub fn state_at(result: &AnalysisResult, node: NodeId, pos: Position) -> Result<&AbstractState, AnalysisError> {
    result.state_at(node, pos)
}

/// Interval of an arithmetic expression. Bottom means every evaluation traps.
pub fn eval_expr(e: &Expr, s: &AbstractState, mode: ArithMode) -> Interval {
    if s.is_bottom() {
        return Interval::bottom();
    }
    match e {
        Expr::Int(v) => Interval::singleton(v.clone()),
        Expr::Var(v) => s.get(v).clone(),
        Expr::Nondet(lo, hi) => {
            let lo = lo.clone().map_or(ExtInt::NegInf, ExtInt::Fin);
            let hi = hi.clone().map_or(ExtInt::PosInf, ExtInt::Fin);
            if fault::active(Fault::NondetDropsUpper) {
                return Interval::new(lo.clone(), lo);
            }
            Interval::new(lo, hi)
        }
        Expr::Unary(UnOp::Neg, a) => crate::contractor::neg_mode(&eval_expr(a, s, mode), mode),
        Expr::Binary(BinOp::Arith(op), l, r) => {
            interval_binop_mode(*op, &eval_expr(l, s, mode), &eval_expr(r, s, mode), mode)
        }
        other => panic!("not an arithmetic expression: {other}"),
    }
}

/// Three-valued truth of a condition over a state.
pub fn eval_condition(c: &Expr, s: &AbstractState, mode: ArithMode) -> Truth3 {
    match c {
        Expr::Bool(b) => Truth3::from_bool(*b),
        Expr::Unary(UnOp::Not, a) => eval_condition(a, s, mode).not(),
        Expr::Binary(BinOp::And, l, r) => eval_condition(l, s, mode).and(eval_condition(r, s, mode)),
        Expr::Binary(BinOp::Or, l, r) => eval_condition(l, s, mode).or(eval_condition(r, s, mode)),
        Expr::Binary(BinOp::Cmp(op), l, r) => eval_cmp(*op, &eval_expr(l, s, mode), &eval_expr(r, s, mode)),
        other => panic!("not a condition: {other}"),
    }
}

pub fn transfer_assign(s: &AbstractState, target: &str, rhs: &Expr, config: &AnalysisConfig) -> AbstractState {
    let mut out = s.clone();
    if fault::active(Fault::AssignKeepsTarget) {
        return out;
    }
    out.set(target, eval_expr(rhs, s, config.arith_mode()));
    out
}

/// Values of `x` compatible with `x op other` for some value of `other`.
fn comparison_bound(op: CmpOp, other: &Interval) -> Interval {
    let Some((lo, hi)) = other.bounds() else {
        return Interval::top();
    };
    let one = ExtInt::from(1);
    match op {
        CmpOp::Lt => Interval::at_most(hi.sub(&one)),
        CmpOp::Le => Interval::at_most(hi.clone()),
        CmpOp::Gt => Interval::at_least(lo.add(&one)),
        CmpOp::Ge => Interval::at_least(lo.clone()),
        CmpOp::Eq => other.clone(),
        CmpOp::Ne => Interval::top(),
    }
}

/// Refinement without contractors: a condition that cannot hold kills the
/// state, and a top-level comparison against a bare variable bounds it.
fn assume_without_contractors(s: &AbstractState, cond: &Expr, polarity: bool, mode: ArithMode) -> AbstractState {
    let truth = eval_condition(cond, s, mode);
    let truth = if polarity { truth } else { truth.not() };
    if truth == Truth3::False {
        return AbstractState::bottom(s.env.keys().cloned());
    }
    let mut out = s.clone();
    if let Formula::Atom(c) = Formula::from_condition(cond, polarity) {
        let l = eval_expr(&c.lhs, s, mode);
        let r = eval_expr(&c.rhs, s, mode);
        if let Expr::Var(x) = &c.lhs {
            out.set(x, out.get(x).meet(&comparison_bound(c.relation, &r)));
        }
        if let Expr::Var(y) = &c.rhs {
            out.set(y, out.get(y).meet(&comparison_bound(c.relation.swap(), &l)));
        }
    }
    out
}

pub fn transfer_assume(s: &AbstractState, cond: &Expr, polarity: bool, config: &AnalysisConfig) -> AbstractState {
    if s.is_bottom() {
        return s.clone();
    }
    let polarity = polarity || fault::active(Fault::AssumeIgnoresPolarity);
    if !config.use_contractors {
        return assume_without_contractors(s, cond, polarity, config.arith_mode());
    }
    let b = config.contractor().contract_condition(cond, polarity, &s.to_box());
    s.with_box(&b)
}

enum Out {
    Fall(AbstractState),
    Branch(AbstractState, AbstractState),
    Exit,
}

fn transfer_node(kind: &NodeKind, s: &AbstractState, config: &AnalysisConfig) -> Out {
    let mode = config.arith_mode();
    let mut out = s.clone();
    match kind {
        NodeKind::Assign { target, rhs } => return Out::Fall(transfer_assign(s, target, rhs, config)),
        NodeKind::Assume(c) => return Out::Fall(transfer_assume(s, c, true, config)),
        NodeKind::Branch { cond, .. } => {
            return Out::Branch(transfer_assume(s, cond, true, config), transfer_assume(s, cond, false, config));
        }
        NodeKind::Call { args, result, .. } => {
            if args.iter().any(|a| eval_expr(a, s, mode).is_bottom()) {
                out.make_bottom();
            } else if let Some(r) = result {
                let v = if fault::active(Fault::CallResultZero) { Interval::constant(0) } else { Interval::top() };
                out.set(r, v);
            }
        }
        NodeKind::Return(e) => {
            if eval_expr(e, s, mode).is_bottom() {
                out.make_bottom();
            }
        }
        NodeKind::Assert(_) | NodeKind::Skip => {}
        NodeKind::Exit => return Out::Exit,
    }
    Out::Fall(out)
}

struct Engine<'a> {
    cfg: &'a Cfg,
    init: &'a AbstractState,
    config: &'a AnalysisConfig,
    before: Vec<AbstractState>,
    outs: Vec<Option<Out>>,
    iterations: usize,
}

impl Engine<'_> {
    fn bottom(&self) -> AbstractState {
        AbstractState::bottom(self.init.env.keys().cloned())
    }

    fn out_along(&self, from: NodeId, label: EdgeLabel) -> AbstractState {
        match (&self.outs[from.0], label) {
            (Some(Out::Fall(s)), EdgeLabel::Fallthrough) => s.clone(),
            (Some(Out::Branch(t, _)), EdgeLabel::True) => t.clone(),
            (Some(Out::Branch(_, f)), EdgeLabel::False) => f.clone(),
            _ => self.bottom(),
        }
    }

    fn input(&self, n: NodeId) -> AbstractState {
        let mut acc = if n == self.cfg.entry { self.init.clone() } else { self.bottom() };
        for e in self.cfg.predecessors(n) {
            acc = acc.join(&self.out_along(e.from, e.label));
        }
        acc
    }

    fn evaluate(&mut self, n: NodeId) {
        self.iterations += 1;
        self.outs[n.0] = Some(transfer_node(self.cfg.node(n), &self.before[n.0], self.config));
    }

    /// Ascending iteration from the current states. Returns the number of
    /// before-state changes.
    fn ascend(&mut self, rpo: &[NodeId], prio: &[usize], counts: &mut [usize], widened: &mut BTreeSet<NodeId>) -> usize {
        let mut updates = 0;
        let mut work: BTreeSet<(usize, NodeId)> = rpo.iter().map(|&n| (prio[n.0], n)).collect();
        while let Some((_, n)) = work.pop_first() {
            let input = self.input(n);
            let old = &self.before[n.0];
            let new = if self.cfg.loop_heads.contains(&n) {
                let joined = old.join(&input);
                if joined != *old && counts[n.0] >= self.config.widening_delay {
                    widened.insert(n);
                    old.widen(&joined)
                } else {
                    joined
                }
            } else {
                old.join(&input)
            };
            if new == *old && self.outs[n.0].is_some() {
                continue;
            }
            if new != *old {
                updates += 1;
                if self.cfg.loop_heads.contains(&n) {
                    counts[n.0] += 1;
                }
            }
            self.before[n.0] = new;
            self.evaluate(n);
            for e in self.cfg.successors(n) {
                if fault::active(Fault::WorklistDropsBackEdge) && prio[e.to.0] <= prio[n.0] {
                    continue;
                }
                work.insert((prio[e.to.0], e.to));
            }
        }
        updates
    }

    fn descend(&mut self, rpo: &[NodeId]) {
        for &n in rpo {
            let input = self.input(n);
            self.before[n.0] = if self.cfg.loop_heads.contains(&n) { self.before[n.0].narrow(&input) } else { input };
            self.evaluate(n);
        }
    }

    fn is_post_fixpoint(&self, rpo: &[NodeId]) -> bool {
        rpo.iter().all(|&n| self.input(n).leq(&self.before[n.0]))
    }
}

/// Interval analysis of one function graph starting from `init` at the entry.
pub fn analyze(cfg: &Cfg, init: &AbstractState, config: &AnalysisConfig) -> AnalysisResult {
    let rpo = cfg.reverse_postorder();
    let mut prio = vec![usize::MAX; cfg.len()];
    for (i, n) in rpo.iter().enumerate() {
        prio[n.0] = i;
    }
    let bottom = AbstractState::bottom(init.env.keys().cloned());
    let mut engine = Engine {
        cfg,
        init,
        config,
        before: vec![bottom.clone(); cfg.len()],
        outs: (0..cfg.len()).map(|_| None).collect(),
        iterations: 0,
    };
    let mut counts = vec![0; cfg.len()];
    let mut widened = BTreeSet::new();
    let ascending_updates = engine.ascend(&rpo, &prio, &mut counts, &mut widened);
    let mut repaired = false;
    if config.narrowing_passes > 0 {
        for _ in 0..config.narrowing_passes {
            engine.descend(&rpo);
        }
        if !engine.is_post_fixpoint(&rpo) {
            repaired = true;
            engine.ascend(&rpo, &prio, &mut counts, &mut widened);
        }
    }

    let mut result = AnalysisResult {
        before: BTreeMap::new(),
        after: BTreeMap::new(),
        branches: BTreeMap::new(),
        iterations: engine.iterations,
        ascending_updates,
        widened_nodes: widened,
        repaired,
    };
    for n in cfg.node_ids() {
        result.before.insert(n, engine.before[n.0].clone());
        let after = match engine.outs[n.0].take() {
            Some(Out::Fall(s)) => s,
            Some(Out::Branch(t, f)) => {
                let j = t.join(&f);
                result.branches.insert(n, (t, f));
                j
            }
            Some(Out::Exit) => engine.before[n.0].clone(),
            None => {
                if cfg.node(n).is_branch() {
                    result.branches.insert(n, (bottom.clone(), bottom.clone()));
                }
                bottom.clone()
            }
        };
        result.after.insert(n, after);
    }
    result
}

/// Bound on ascending before-state changes guaranteed by the widening schedule.
pub fn ascending_update_bound(cfg: &Cfg, config: &AnalysisConfig) -> usize {
    cfg.len() * (config.widening_delay + 3) * cfg.variables.len().max(1)
}

/// Entry state of a function: parameters unknown, locals zero.
pub fn initial_state(func: &Function) -> AbstractState {
    let params = func.params.iter().map(|p| (p.clone(), Interval::top()));
    let locals = func.locals.iter().map(|l| (l.clone(), Interval::constant(0)));
    AbstractState::new(params.chain(locals))
}

#[derive(Clone, Debug)]
pub struct FunctionAnalysis {
    pub cfg: Cfg,
    pub result: AnalysisResult,
}

/// Per-function analyses of a whole program.
#[derive(Clone, Debug)]
pub struct ProgramAnalysis {
    pub config: AnalysisConfig,
    pub functions: BTreeMap<Ident, FunctionAnalysis>,
}

impl ProgramAnalysis {
    pub fn function(&self, name: &str) -> Result<&FunctionAnalysis, AnalysisError> {
        self.functions.get(name).ok_or_else(|| AnalysisError::UnknownFunction(name.to_string()))
    }
}

/// One block per function: every node with its state before and after it,
/// and the states along both edges of branches.
impl fmt::Display for ProgramAnalysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, fa) in &self.functions {
            writeln!(f, "fn {name}")?;
            for n in fa.cfg.node_ids() {
                writeln!(f, "  {:<4} {}", n.to_string(), fa.cfg.node(n).describe())?;
                if let Some(s) = fa.result.before.get(&n) {
                    writeln!(f, "       before {s}")?;
                }
                if let Some(s) = fa.result.after.get(&n) {
                    writeln!(f, "       after  {s}")?;
                }
                if let Some((t, e)) = fa.result.branches.get(&n) {
                    writeln!(f, "       true   {t}")?;
                    writeln!(f, "       false  {e}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn analyze_function(func: &Function, config: &AnalysisConfig) -> FunctionAnalysis {
    let cfg = build_cfg(func);
    let result = analyze(&cfg, &initial_state(func), config);
    FunctionAnalysis { cfg, result }
}

pub fn analyze_program(prog: &Program, config: &AnalysisConfig) -> ProgramAnalysis {
    let functions = prog.functions.iter().map(|f| (f.name.clone(), analyze_function(f, config))).collect();
    ProgramAnalysis { config: *config, functions }
}
