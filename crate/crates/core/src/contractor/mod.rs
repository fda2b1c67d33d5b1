//! Forward-backward (HC4-revise) contraction of integer boxes.
//!
//! A constraint `lhs ⋈ rhs` is read as `lhs - rhs ⋈ 0`. The forward pass
//! evaluates every subterm over the box, the backward pass intersects the
//! root with the interval the relation requires and pushes inverse images
//! down to the variables. Conditions with connectives are first put into
//! negation-normal form; conjunctions are contracted round-robin to a
//! fixpoint and disjunctions by the hull of their contracted disjuncts.

mod boxn;
mod hc4;

use std::fmt;

pub use boxn::{BoxN, ParseBoxError};
pub use hc4::{AnnNode, Annotated};
pub(crate) use hc4::neg_mode;

use crate::fault::{self, Fault};
use crate::interval::{ArithMode, CmpOp, ExtInt, Interval, Truth3};
use crate::lang::{BinOp, Expr, UnOp};

/// Upper bound on forward/backward sweeps of a single constraint.
const MAX_SWEEPS: usize = 100;
/// Bounds past this many bits are not worth chasing.
const BOUND_BITS: u64 = 128;

pub const DEFAULT_MAX_ROUNDS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub relation: CmpOp,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Constraint {
    pub fn new(relation: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        Constraint { relation, lhs, rhs }
    }

    /// Reads a comparison expression as a constraint.
    pub fn from_expr(e: &Expr) -> Option<Self> {
        match e {
            Expr::Binary(BinOp::Cmp(op), l, r) => Some(Constraint::new(*op, (**l).clone(), (**r).clone())),
            _ => None,
        }
    }

    pub fn negate(&self) -> Self {
        Constraint::new(self.relation.negate(), self.lhs.clone(), self.rhs.clone())
    }

    pub fn to_expr(&self) -> Expr {
        Expr::cmp(self.relation, self.lhs.clone(), self.rhs.clone())
    }

    /// The interval `lhs - rhs` must fall into, or `None` for `!=`.
    pub fn required(&self) -> Option<Interval> {
        let z = ExtInt::zero;
        Some(match self.relation {
            CmpOp::Eq => Interval::constant(0),
            CmpOp::Le => Interval::at_most(z()),
            CmpOp::Lt if fault::active(Fault::StrictLessOffByOne) => Interval::at_most(ExtInt::from(-2)),
            CmpOp::Lt => Interval::at_most(ExtInt::from(-1)),
            CmpOp::Ge if fault::active(Fault::GreaterEqOffByOne) => Interval::at_least(ExtInt::from(1)),
            CmpOp::Ge => Interval::at_least(z()),
            CmpOp::Gt => Interval::at_least(ExtInt::from(1)),
            CmpOp::Ne => return None,
        })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// A condition in negation-normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Atom(Constraint),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// Negation-normal form of `cond` (or of its negation when `polarity`
    /// is false). Nested connectives of the same kind are flattened.
    pub fn from_condition(cond: &Expr, polarity: bool) -> Formula {
        match cond {
            Expr::Bool(b) => Formula::Const(*b == polarity),
            Expr::Unary(UnOp::Not, c) => Formula::from_condition(c, !polarity),
            Expr::Binary(BinOp::Cmp(op), l, r) => {
                let op = if polarity { *op } else { op.negate() };
                Formula::Atom(Constraint::new(op, (**l).clone(), (**r).clone()))
            }
            Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => {
                let conj = (*op == BinOp::And) == polarity;
                let mut parts = Vec::new();
                for side in [l, r] {
                    match Formula::from_condition(side, polarity) {
                        Formula::And(xs) if conj => parts.extend(xs),
                        Formula::Or(xs) if !conj => parts.extend(xs),
                        f => parts.push(f),
                    }
                }
                if conj {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                }
            }
            other => panic!("not a condition: {other}"),
        }
    }
}

/// Outcome of classifying a condition over a box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Truth3,
    /// Contraction of the box under the condition.
    pub box_in: BoxN,
    /// Contraction of the box under the negated condition.
    pub box_out: BoxN,
}

/// Contraction settings. [`ArithMode::Extrapolate`] disables inverse
/// projections through non-constant arithmetic, mirroring the forward mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contractor {
    pub mode: ArithMode,
    pub max_rounds: usize,
}

impl Default for Contractor {
    fn default() -> Self {
        Contractor { mode: ArithMode::Precise, max_rounds: DEFAULT_MAX_ROUNDS }
    }
}

impl Contractor {
    pub fn with_mode(mode: ArithMode) -> Self {
        Contractor { mode, ..Contractor::default() }
    }

    pub fn forward_eval(&self, e: &Expr, b: &BoxN) -> Annotated {
        hc4::forward(e, b, self.mode)
    }

    pub fn backward_prop(&self, t: &Annotated, required: &Interval, b: &BoxN) -> BoxN {
        let mut out = b.clone();
        hc4::backward(t, required, &mut out, self.mode);
        out
    }

    /// One forward/backward sweep of `c` over `b`.
    fn sweep(&self, c: &Constraint, b: &BoxN) -> BoxN {
        let l = self.forward_eval(&c.lhs, b);
        let r = self.forward_eval(&c.rhs, b);
        // The synthetic root `lhs - rhs` is always evaluated exactly.
        let diff = l.value.sub(&r.value);
        let mut out = b.clone();
        let root = match c.required() {
            Some(req) => diff.meet(&req),
            None => trim_zero_end(&diff),
        };
        if root.is_bottom() {
            out.make_empty();
            return out;
        }
        let lreq = root.add(&r.value);
        hc4::backward(&l, &lreq, &mut out, self.mode);
        let rreq = l.value.meet(&lreq).sub(&root);
        hc4::backward(&r, &rreq, &mut out, self.mode);
        out
    }

    /// Sweeps `c` until the box stops shrinking.
    pub fn hc4_revise(&self, c: &Constraint, b: &BoxN) -> BoxN {
        let mut cur = b.clone();
        for _ in 0..MAX_SWEEPS {
            if cur.is_empty() {
                break;
            }
            let next = keep_small_bounds(&cur, self.sweep(c, &cur));
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }

    pub fn contract_fixpoint(&self, cs: &[Constraint], b: &BoxN, max_rounds: usize) -> BoxN {
        let mut cur = b.clone();
        for _ in 0..max_rounds.max(1) {
            let before = cur.clone();
            for c in cs {
                cur = self.hc4_revise(c, &cur);
                if cur.is_empty() {
                    return cur;
                }
            }
            if cur == before {
                break;
            }
        }
        cur
    }

    pub fn contract_formula(&self, f: &Formula, b: &BoxN) -> BoxN {
        match f {
            Formula::Const(true) => b.clone(),
            Formula::Const(false) => {
                let mut out = b.clone();
                out.make_empty();
                out
            }
            Formula::Atom(c) => self.hc4_revise(c, b),
            Formula::And(parts) => {
                let mut cur = b.clone();
                for _ in 0..self.max_rounds.max(1) {
                    let before = cur.clone();
                    for p in parts {
                        cur = self.contract_formula(p, &cur);
                        if cur.is_empty() {
                            return cur;
                        }
                    }
                    if cur == before {
                        break;
                    }
                }
                cur
            }
            Formula::Or(parts) => {
                let mut out = b.clone();
                out.make_empty();
                for p in parts {
                    out = out.join(&self.contract_formula(p, b));
                }
                out
            }
        }
    }

    /// Contraction of `b` under `cond` (or `!cond` when `polarity` is false).
    pub fn contract_condition(&self, cond: &Expr, polarity: bool, b: &BoxN) -> BoxN {
        self.contract_formula(&Formula::from_condition(cond, polarity), b)
    }

    pub fn classify_condition(&self, cond: &Expr, b: &BoxN) -> Classification {
        let box_in = self.contract_condition(cond, true, b);
        let box_out = self.contract_condition(cond, false, b);
        let verdict = match (box_in.is_empty(), box_out.is_empty()) {
            (false, _) if fault::active(Fault::ClassifyIgnoresOutBox) => Truth3::True,
            (false, true) => Truth3::True,
            (true, false) => Truth3::False,
            // No point satisfies either side: the box is empty or the
            // condition cannot be evaluated anywhere in it.
            _ => Truth3::Maybe,
        };
        Classification { verdict, box_in, box_out }
    }
}

pub fn forward_eval(e: &Expr, b: &BoxN) -> Annotated {
    Contractor::default().forward_eval(e, b)
}

pub fn backward_prop(t: &Annotated, required: &Interval, b: &BoxN) -> BoxN {
    Contractor::default().backward_prop(t, required, b)
}

fn huge(b: &ExtInt) -> bool {
    b.as_finite().is_some_and(|n| n.bits() > BOUND_BITS)
}

/// `next` with every bound that moved to a huge value put back to its value
/// in `prev`. Multi-occurrence constraints over unbounded boxes can creep a
/// bound forward geometrically forever; this cuts the chain off.
fn keep_small_bounds(prev: &BoxN, mut next: BoxN) -> BoxN {
    if next.is_empty() {
        return next;
    }
    for (v, old) in prev.iter() {
        let (Some((ol, oh)), Some((nl, nh))) = (old.bounds(), next.range(v).bounds()) else {
            continue;
        };
        let lo = if nl != ol && huge(nl) { ol } else { nl };
        let hi = if nh != oh && huge(nh) { oh } else { nh };
        let r = Interval::new(lo.clone(), hi.clone());
        next.set(v, r);
    }
    next
}

/// `i` without zero when zero is one of its bounds.
fn trim_zero_end(i: &Interval) -> Interval {
    let z = ExtInt::zero();
    match i.bounds() {
        Some((lo, _)) if *lo == z => i.meet(&Interval::at_least(ExtInt::from(1))),
        Some((_, hi)) if *hi == z => i.meet(&Interval::at_most(ExtInt::from(-1))),
        _ => i.clone(),
    }
}

pub fn hc4_revise(c: &Constraint, b: &BoxN) -> BoxN {
    Contractor::default().hc4_revise(c, b)
}

pub fn contract_fixpoint(cs: &[Constraint], b: &BoxN, max_rounds: usize) -> BoxN {
    Contractor::default().contract_fixpoint(cs, b, max_rounds)
}

pub fn classify_condition(cond: &Expr, b: &BoxN) -> Classification {
    Contractor::default().classify_condition(cond, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_condition, parse_expr};

    fn bx(s: &str) -> BoxN {
        s.parse().unwrap()
    }

    fn constraint(s: &str) -> Constraint {
        Constraint::from_expr(&parse_condition(s).unwrap()).unwrap()
    }

    #[test]
    fn forward_examples() {
        assert_eq!(forward_eval(&parse_expr("x + y").unwrap(), &bx("x:[0,10], y:[2,4]")).value, Interval::range(2, 14));
        assert_eq!(forward_eval(&parse_expr("x * x").unwrap(), &bx("x:[-3,3]")).value, Interval::range(-9, 9));
        assert_eq!(forward_eval(&parse_expr("7").unwrap(), &bx("x:[0,1]")).value, Interval::constant(7));
    }

    #[test]
    fn backward_examples() {
        let b = bx("x:[0,10], y:[2,4]");
        let t = forward_eval(&parse_expr("x + y").unwrap(), &b);
        assert_eq!(backward_prop(&t, &Interval::constant(5), &b), bx("x:[1,3], y:[2,4]"));
        let b = bx("x:[0,10]");
        let t = forward_eval(&parse_expr("x").unwrap(), &b);
        assert_eq!(backward_prop(&t, &Interval::range(3, 7), &b), bx("x:[3,7]"));
        let b = bx("x:[0,1], y:[0,1]");
        let t = forward_eval(&parse_expr("x + y").unwrap(), &b);
        assert!(backward_prop(&t, &Interval::constant(9), &b).is_empty());
    }

    #[test]
    fn revise_examples() {
        assert_eq!(hc4_revise(&constraint("x + y == 5"), &bx("x:[0,10], y:[2,4]")), bx("x:[1,3], y:[2,4]"));
        assert_eq!(hc4_revise(&constraint("x >= 0"), &bx("x:[3,7]")), bx("x:[3,7]"));
        assert_eq!(hc4_revise(&constraint("x * x <= 4"), &bx("x:[-10,10]")), bx("x:[-2,2]"));
    }

    #[test]
    fn strict_relations_are_integer_aware() {
        assert_eq!(hc4_revise(&constraint("x < 5"), &bx("x:[0,10]")), bx("x:[0,4]"));
        assert_eq!(hc4_revise(&constraint("x > y"), &bx("x:[0,10], y:[3,20]")), bx("x:[4,10], y:[3,9]"));
        assert_eq!(hc4_revise(&constraint("x != 3"), &bx("x:[3,3]")).to_string(), "empty");
        assert_eq!(hc4_revise(&constraint("x != 3"), &bx("x:[3,4]")), bx("x:[4,4]"));
        assert_eq!(hc4_revise(&constraint("x != 3"), &bx("x:[2,4]")), bx("x:[2,4]"));
    }

    #[test]
    fn revise_iterates_to_a_fixpoint() {
        // the second sweep uses the narrowed y to shrink x again
        let once = hc4_revise(&constraint("2 * x + y == 5"), &bx("x:[0,10], y:[0,1]"));
        assert_eq!(once, bx("x:[2,2], y:[1,1]"));
        assert_eq!(hc4_revise(&constraint("2 * x + y == 5"), &once), once);
    }

    #[test]
    fn fixpoint_examples() {
        // Every constraint on its own is already consistent on x = y ∈ [0,4];
        // separate per-constraint contraction cannot isolate the single
        // solution x = y = 2.
        let cs = [constraint("x == y"), constraint("x + y == 4")];
        assert_eq!(contract_fixpoint(&cs, &bx("x:[0,10], y:[0,10]"), 10), bx("x:[0,4], y:[0,4]"));
        assert_eq!(contract_fixpoint(&[], &bx("x:[0,10]"), 10), bx("x:[0,10]"));
        let cs = [constraint("x < 0"), constraint("x > 0")];
        assert!(contract_fixpoint(&cs, &bx("x:[-5,5]"), 10).is_empty());
    }

    #[test]
    fn classification_examples() {
        let c = parse_condition("x > 3 && x < 10").unwrap();
        let k = classify_condition(&c, &bx("x:[4,9]"));
        assert_eq!(k.verdict, Truth3::True);
        assert!(k.box_out.is_empty());
        let k = classify_condition(&c, &bx("x:[0,20]"));
        assert_eq!(k.verdict, Truth3::Maybe);
        assert_eq!(k.box_in, bx("x:[4,9]"));
        assert_eq!(k.box_out, bx("x:[0,20]"));
        let k = classify_condition(&parse_condition("x < 0").unwrap(), &bx("x:[1,5]"));
        assert_eq!(k.verdict, Truth3::False);
        assert!(k.box_in.is_empty());
    }

    #[test]
    fn disjunctions_hull_their_branches() {
        let c = parse_condition("x < 2 || x > 8").unwrap();
        let k = classify_condition(&c, &bx("x:[0,20], y:[0,1]"));
        assert_eq!(k.box_in, bx("x:[0,20], y:[0,1]"));
        assert_eq!(k.box_out, bx("x:[2,8], y:[0,1]"));
        let c = parse_condition("x < 2 || y > 8").unwrap();
        assert_eq!(classify_condition(&c, &bx("x:[5,20], y:[0,1]")).verdict, Truth3::False);
    }

    #[test]
    fn negation_normal_form() {
        let f = Formula::from_condition(&parse_condition("!(x < 1 && (y == 2 && !(z > 3)))").unwrap(), true);
        let atom = |s: &str| Formula::Atom(constraint(s));
        assert_eq!(f, Formula::Or(vec![atom("x >= 1"), atom("y != 2"), atom("z > 3")]));
        assert_eq!(Formula::from_condition(&Expr::Bool(true), false), Formula::Const(false));
    }

    #[test]
    fn division_contracts_both_operands() {
        let b = hc4_revise(&constraint("x / y == 3"), &bx("x:[0,10], y:[-5,5]"));
        assert_eq!(b, bx("x:[3,10], y:[1,3]"));
        // a divisor that can only be zero leaves nothing
        assert!(hc4_revise(&constraint("x / y == 0"), &bx("x:[0,10], y:[0,0]")).is_empty());
    }

    #[test]
    fn extrapolated_arithmetic_does_not_project() {
        let c = Contractor::with_mode(ArithMode::Extrapolate);
        assert_eq!(c.hc4_revise(&constraint("x + y == 5"), &bx("x:[0,10], y:[2,4]")), bx("x:[0,10], y:[2,4]"));
        assert_eq!(c.hc4_revise(&constraint("x < 5"), &bx("x:[0,10]")), bx("x:[0,4]"));
        assert_eq!(c.hc4_revise(&constraint("x + 1 < 5"), &bx("x:[0,10]")), bx("x:[0,10]"));
    }
}
