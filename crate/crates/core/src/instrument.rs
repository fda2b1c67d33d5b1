//! Interval invariants emitted as `assume` statements.
//!
//! Assumptions are anchored at loops, conditionals, assertions and calls and
//! only mention the variables the anchor statement reads.

use std::collections::BTreeSet;
use std::fmt;

use crate::absint::{AbstractState, ProgramAnalysis};
use crate::fault::{self, Fault};
use crate::interval::{CmpOp, ExtInt};
use crate::lang::{free_vars, Block, Expr, Ident, NodeId, Program, Stmt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKind {
    LoopBefore,
    LoopInside,
    Conditional,
    Assertion,
    Call,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointKind::LoopBefore => "loop-before",
            PointKind::LoopInside => "loop-inside",
            PointKind::Conditional => "conditional",
            PointKind::Assertion => "assertion",
            PointKind::Call => "call",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrumentationPoint {
    pub function: Ident,
    /// Node of the anchor statement in the input program.
    pub node: NodeId,
    pub kind: PointKind,
    pub vars: BTreeSet<Ident>,
    pub emitted: Expr,
}

impl fmt::Display for InstrumentationPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} {}: assume({});", self.function, self.node, self.kind, self.emitted)
    }
}

/// Variables read by the anchor statement: its condition, or its call
/// arguments.
pub fn anchor_vars(stmt: &Stmt) -> BTreeSet<Ident> {
    match stmt {
        Stmt::If { cond, .. } | Stmt::While { cond, .. } | Stmt::Assert(cond) => free_vars(cond),
        Stmt::Call { args, .. } => args.iter().flat_map(free_vars).collect(),
        _ => BTreeSet::new(),
    }
}

/// `v >= lo && v <= hi` over `vars`, skipping infinite bounds. `None` when
/// nothing is known; the false literal when the state is unreachable.
pub fn intervals_to_assume_expr(vars: &BTreeSet<Ident>, state: &AbstractState) -> Option<Expr> {
    if state.is_bottom() {
        return Some(Expr::Bool(false));
    }
    let mut conjuncts = Vec::new();
    for v in vars {
        let Some((lo, hi)) = state.get(v).bounds() else { continue };
        if let ExtInt::Fin(lo) = lo {
            let lo = if fault::active(Fault::InstrumentLowerOffByOne) { lo + 1 } else { lo.clone() };
            conjuncts.push(Expr::cmp(CmpOp::Ge, Expr::var(v), Expr::Int(lo)));
        }
        if let ExtInt::Fin(hi) = hi {
            conjuncts.push(Expr::cmp(CmpOp::Le, Expr::var(v), Expr::Int(hi.clone())));
        }
    }
    conjuncts.into_iter().reduce(Expr::and)
}

struct Instrumenter<'a> {
    analysis: &'a ProgramAnalysis,
    function: Ident,
    all_vars: BTreeSet<Ident>,
    points: Vec<InstrumentationPoint>,
}

impl Instrumenter<'_> {
    fn emit(&mut self, node: usize, kind: PointKind, vars: BTreeSet<Ident>, state: Option<&AbstractState>, out: &mut Block) {
        let vars = if fault::active(Fault::InstrumentAllVariables) { self.all_vars.clone() } else { vars };
        let Some(state) = state else { return };
        if let Some(e) = intervals_to_assume_expr(&vars, state) {
            out.push(Stmt::Assume(e.clone()));
            self.points.push(InstrumentationPoint {
                function: self.function.clone(),
                node: NodeId(node),
                kind,
                vars,
                emitted: e,
            });
        }
    }

    fn block(&mut self, block: &[Stmt], next: &mut usize) -> Block {
        let mut out = Vec::with_capacity(block.len());
        for s in block {
            let id = *next;
            *next += 1;
            let result = &self.analysis.functions[&self.function].result;
            let before = result.before.get(&NodeId(id));
            let vars = anchor_vars(s);
            match s {
                Stmt::While { cond, body } => {
                    self.emit(id, PointKind::LoopBefore, vars.clone(), before, &mut out);
                    let edges = result.branches.get(&NodeId(id));
                    let inside = if fault::active(Fault::InstrumentBodyUsesExitEdge) {
                        edges.map(|e| &e.1)
                    } else {
                        edges.map(|e| &e.0)
                    };
                    let mut new_body = Vec::new();
                    self.emit(id, PointKind::LoopInside, vars, inside, &mut new_body);
                    new_body.extend(self.block(body, next));
                    out.push(Stmt::While { cond: cond.clone(), body: new_body });
                }
                Stmt::If { cond, then_block, else_block } => {
                    self.emit(id, PointKind::Conditional, vars, before, &mut out);
                    let then_block = self.block(then_block, next);
                    let else_block = else_block.as_ref().map(|b| self.block(b, next));
                    out.push(Stmt::If { cond: cond.clone(), then_block, else_block });
                }
                Stmt::Assert(_) => {
                    self.emit(id, PointKind::Assertion, vars, before, &mut out);
                    out.push(s.clone());
                }
                Stmt::Call { .. } => {
                    self.emit(id, PointKind::Call, vars, before, &mut out);
                    out.push(s.clone());
                }
                _ => out.push(s.clone()),
            }
        }
        out
    }
}

/// Inserts interval assumptions before every loop, conditional, assertion
/// and call, and at the top of every loop body. `analysis` must be an
/// analysis of `prog`.
pub fn instrument_program(prog: &Program, analysis: &ProgramAnalysis) -> (Program, Vec<InstrumentationPoint>) {
    let mut out = prog.clone();
    let mut points = Vec::new();
    for f in &mut out.functions {
        let mut ins = Instrumenter {
            analysis,
            function: f.name.clone(),
            all_vars: f.variables().cloned().collect(),
            points: Vec::new(),
        };
        let mut next = 0;
        f.body = ins.block(&f.body, &mut next);
        points.extend(ins.points);
    }
    (out, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absint::{analyze_program, AnalysisConfig};
    use crate::interval::Interval;
    use crate::lang::parse_program;

    fn vars(names: &[&str]) -> BTreeSet<Ident> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn instrument(src: &str) -> (String, Vec<InstrumentationPoint>) {
        let p = parse_program(src).unwrap();
        let (q, points) = instrument_program(&p, &analyze_program(&p, &AnalysisConfig::default()));
        (q.to_string(), points)
    }

    #[test]
    fn assume_expr_examples() {
        let s = AbstractState::new([("x", Interval::range(4, 9)), ("y", Interval::top())]);
        assert_eq!(intervals_to_assume_expr(&vars(&["x"]), &s).unwrap().to_string(), "x >= 4 && x <= 9");
        assert_eq!(intervals_to_assume_expr(&vars(&["y"]), &s), None);
        assert_eq!(intervals_to_assume_expr(&vars(&[]), &s), None);
        let s = AbstractState::new([
            ("x", Interval::at_least(ExtInt::from(0))),
            ("y", Interval::at_most(ExtInt::from(5))),
        ]);
        assert_eq!(intervals_to_assume_expr(&vars(&["x", "y"]), &s).unwrap().to_string(), "x >= 0 && y <= 5");
        let s = AbstractState::bottom(["x"]);
        assert_eq!(intervals_to_assume_expr(&vars(&["x"]), &s), Some(Expr::Bool(false)));
    }

    #[test]
    fn loop_example() {
        let (p, points) = instrument("int i = 0; while (i < 10) { i = i + 1; }");
        let expected = parse_program(
            "int i = 0; assume(i >= 0 && i <= 10); while (i < 10) { assume(i >= 0 && i <= 9); i = i + 1; }",
        )
        .unwrap();
        assert_eq!(p, expected.to_string());
        let kinds: Vec<_> = points.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, [PointKind::LoopBefore, PointKind::LoopInside]);
        assert!(points.iter().all(|p| p.node == NodeId(1) && p.vars == vars(&["i"])));
    }

    #[test]
    fn call_and_top_examples() {
        let (p, _) = instrument("fn f(a) { return a; } fn main() { int x = 2; f(x); }");
        assert!(p.contains("assume(x >= 2 && x <= 2);\n    f(x);"), "{p}");
        let (p, points) = instrument("int y = nondet(); if (y < 5) { y = 1; }");
        assert!(points.is_empty());
        assert!(!p.contains("assume"));
    }

    #[test]
    fn only_statement_variables() {
        let (_, points) = instrument("int x = 3; int y = 4; int z; if (x < y) { z = 1; } assert(z >= 0);");
        let scopes: Vec<_> = points.iter().map(|p| (p.kind, p.vars.clone())).collect();
        assert_eq!(
            scopes,
            [(PointKind::Conditional, vars(&["x", "y"])), (PointKind::Assertion, vars(&["z"]))]
        );
        for p in &points {
            assert!(free_vars(&p.emitted).is_subset(&p.vars));
        }
    }

    #[test]
    fn output_round_trips() {
        let (p, _) = instrument("int i = 0; int j; while (i < 3) { j = 0; while (j < i) { j = j + 1; } i = i + 1; }");
        assert_eq!(parse_program(&p).unwrap().to_string(), p);
    }
}
