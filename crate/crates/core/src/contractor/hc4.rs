//! Forward evaluation and inverse projections over expression trees.

use num_bigint::BigInt;

use super::BoxN;
use crate::fault::{self, Fault};
use crate::interval::{interval_binop_mode, ArithMode, ArithOp, ExtInt, Interval};
use crate::lang::{Expr, Ident, UnOp};

/// An arithmetic expression with the interval of every subterm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotated {
    pub node: AnnNode,
    pub value: Interval,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnnNode {
    Const(BigInt),
    Var(Ident),
    /// A nondeterministic leaf; never refined.
    Nondet,
    Neg(Box<Annotated>),
    Bin(ArithOp, Box<Annotated>, Box<Annotated>),
}

impl Annotated {
    /// Structural equality of the underlying expressions, ignoring values.
    fn same_term(&self, other: &Annotated) -> bool {
        match (&self.node, &other.node) {
            (AnnNode::Const(a), AnnNode::Const(b)) => a == b,
            (AnnNode::Var(a), AnnNode::Var(b)) => a == b,
            (AnnNode::Neg(a), AnnNode::Neg(b)) => a.same_term(b),
            (AnnNode::Bin(o1, l1, r1), AnnNode::Bin(o2, l2, r2)) => o1 == o2 && l1.same_term(l2) && r1.same_term(r2),
            _ => false,
        }
    }
}

pub(crate) fn neg_mode(a: &Interval, mode: ArithMode) -> Interval {
    if mode == ArithMode::Extrapolate && !a.is_bottom() && !a.is_singleton() {
        return Interval::top();
    }
    a.neg()
}

/// Bottom-up interval evaluation. Variables missing from the box are Top.
pub(crate) fn forward(e: &Expr, b: &BoxN, mode: ArithMode) -> Annotated {
    let (node, value) = match e {
        Expr::Int(v) => (AnnNode::Const(v.clone()), Interval::singleton(v.clone())),
        Expr::Var(v) => (AnnNode::Var(v.clone()), b.get(v).cloned().unwrap_or_else(Interval::top)),
        Expr::Nondet(lo, hi) => {
            let lo = lo.clone().map_or(ExtInt::NegInf, ExtInt::Fin);
            let hi = hi.clone().map_or(ExtInt::PosInf, ExtInt::Fin);
            (AnnNode::Nondet, Interval::new(lo, hi))
        }
        Expr::Unary(UnOp::Neg, a) => {
            let a = forward(a, b, mode);
            let v = neg_mode(&a.value, mode);
            (AnnNode::Neg(Box::new(a)), v)
        }
        Expr::Binary(crate::lang::BinOp::Arith(op), l, r) => {
            let l = forward(l, b, mode);
            let r = forward(r, b, mode);
            let v = interval_binop_mode(*op, &l.value, &r.value, mode);
            (AnnNode::Bin(*op, Box::new(l), Box::new(r)), v)
        }
        other => panic!("not an arithmetic expression: {other}"),
    };
    Annotated { node, value }
}

/// Top-down narrowing of `b` so that `t` evaluates into `required`.
pub(crate) fn backward(t: &Annotated, required: &Interval, b: &mut BoxN, mode: ArithMode) {
    let v = t.value.meet(required);
    if v.is_bottom() {
        b.make_empty();
        return;
    }
    if b.is_empty() {
        return;
    }
    match &t.node {
        AnnNode::Const(_) | AnnNode::Nondet => {}
        AnnNode::Var(x) => {
            if b.get(x).is_some() {
                b.restrict(x, &v);
            }
        }
        AnnNode::Neg(a) => {
            let req = if fault::active(Fault::NegBackwardNoFlip) { v.clone() } else { neg_mode(&v, mode) };
            backward(a, &req, b, mode);
        }
        AnnNode::Bin(op, l, r) => {
            if mode == ArithMode::Extrapolate && !(v.is_singleton() && l.value.is_singleton() && r.value.is_singleton()) {
                return;
            }
            let (lreq, rreq) = project(*op, &v, l, r);
            backward(l, &lreq, b, mode);
            backward(r, &rreq, b, mode);
        }
    }
}

/// Required intervals for the operands of `l op r` given its value `v`.
fn project(op: ArithOp, v: &Interval, l: &Annotated, r: &Annotated) -> (Interval, Interval) {
    let (a, c) = (&l.value, &r.value);
    match op {
        ArithOp::Add => {
            if fault::active(Fault::AddBackwardIgnoresSibling) {
                return (v.clone(), v.clone());
            }
            let a2 = a.meet(&v.sub(c));
            let c2 = c.meet(&v.sub(&a2));
            (a2, c2)
        }
        ArithOp::Sub => {
            let a2 = a.meet(&v.add(c));
            let c2 = c.meet(&a2.sub(v));
            (a2, c2)
        }
        ArithOp::Mul if l.same_term(r) => {
            let s = sqrt_inverse(v, a);
            (s.clone(), s)
        }
        ArithOp::Mul => {
            let a2 = a.meet(&mul_inverse(v, c));
            let c2 = c.meet(&mul_inverse(v, &a2));
            (a2, c2)
        }
        ArithOp::Div => {
            if let Some(exact) = div_project_per_divisor(v, a, c) {
                return exact;
            }
            let a2 = a.meet(&div_numerator_inverse(v, c));
            let c2 = strip_zero_ends(&c.meet(&div_divisor_inverse(v, &a2)));
            (a2, c2)
        }
    }
}

fn one() -> ExtInt {
    ExtInt::from(1)
}

/// Hull of the integers `x` with `x * b ∈ y` for some `b ∈ bs`.
pub(crate) fn mul_inverse(y: &Interval, bs: &Interval) -> Interval {
    let Some((y1, y2)) = y.bounds() else {
        return Interval::bottom();
    };
    if bs.is_bottom() {
        return Interval::bottom();
    }
    if bs.contains_zero() && y.contains_zero() {
        return Interval::top();
    }
    let mut out = Interval::bottom();
    for part in bs.split_nonzero() {
        let (b1, b2) = part.bounds().expect("non-empty part");
        // x * b ∈ [y1,y2] with b < 0 is x * (-b) ∈ [-y2,-y1]
        let (b1, b2, y1, y2) = if b1.signum().is_lt() {
            (b2.neg(), b1.neg(), y2.neg(), y1.neg())
        } else {
            (b1.clone(), b2.clone(), y1.clone(), y2.clone())
        };
        let divisors: Vec<&ExtInt> =
            if fault::active(Fault::MulInverseUsesLowDivisor) { vec![&b1] } else { vec![&b1, &b2] };
        let lo = divisors.iter().map(|b| y1.div_ceil_pos(b)).min().expect("non-empty");
        let hi = divisors.iter().map(|b| y2.div_floor_pos(b)).max().expect("non-empty");
        out = out.join(&Interval::new(lo, hi));
    }
    out
}

fn isqrt_floor(v: &ExtInt) -> ExtInt {
    match v {
        ExtInt::Fin(n) => ExtInt::Fin(n.sqrt()),
        other => other.clone(),
    }
}

fn isqrt_ceil(v: &ExtInt) -> ExtInt {
    match v {
        ExtInt::Fin(n) => {
            let s = n.sqrt();
            if &(&s * &s) == n {
                ExtInt::Fin(s)
            } else {
                ExtInt::Fin(s + 1)
            }
        }
        other => other.clone(),
    }
}

/// The values `c ∈ child` with `c * c ∈ v`, hulled.
fn sqrt_inverse(v: &Interval, child: &Interval) -> Interval {
    let Some((lo, hi)) = v.bounds() else {
        return Interval::bottom();
    };
    if hi.signum().is_lt() {
        return Interval::bottom();
    }
    let s = isqrt_floor(hi);
    let r = if lo.signum().is_gt() { isqrt_ceil(lo) } else { ExtInt::zero() };
    let neg = child.meet(&Interval::new(s.neg(), r.neg()));
    let pos = child.meet(&Interval::new(r, s));
    neg.join(&pos)
}

/// Splits into the parts below zero, at zero and above zero.
fn sign_parts(i: &Interval) -> (Interval, Interval, Interval) {
    let neg = i.meet(&Interval::at_most(ExtInt::from(-1)));
    let zero = i.meet(&Interval::constant(0));
    let pos = i.meet(&Interval::at_least(one()));
    (neg, zero, pos)
}

/// `[min |x|, max |x|]` of a one-signed interval.
fn magnitude(i: &Interval) -> (ExtInt, ExtInt) {
    let (l, h) = i.bounds().expect("non-empty");
    if l.signum().is_lt() {
        (h.abs(), l.abs())
    } else {
        (l.clone(), h.clone())
    }
}

/// Divisor ranges up to this many values are projected one divisor at a time.
const DIV_ENUM_LIMIT: u32 = 64;

/// Exact projection of `trunc(a / b) ∈ q` onto `a` and `b` by trying each
/// divisor; `None` when the divisor range is unbounded or too wide.
fn div_project_per_divisor(q: &Interval, as_: &Interval, bs: &Interval) -> Option<(Interval, Interval)> {
    if bs.width()? > BigInt::from(DIV_ENUM_LIMIT) {
        return None;
    }
    let (mut a2, mut b2) = (Interval::bottom(), Interval::bottom());
    for d in bs.iter_values().filter(|d| d.sign() != num_bigint::Sign::NoSign) {
        let d = Interval::singleton(d);
        let n = as_.meet(&div_numerator_inverse(q, &d));
        if !n.is_bottom() {
            a2 = a2.join(&n);
            b2 = b2.join(&d);
        }
    }
    Some((a2, b2))
}

/// Hull of the integers `a` with `trunc(a / b) ∈ q` for some nonzero `b ∈ bs`.
fn div_numerator_inverse(q: &Interval, bs: &Interval) -> Interval {
    let (qn, qz, qp) = sign_parts(q);
    let mut out = Interval::bottom();
    for bpart in bs.split_nonzero() {
        let (m1, m2) = magnitude(&bpart);
        let bpos = bpart.lo().expect("non-empty").signum().is_gt();
        if !qz.is_bottom() {
            let r = m2.sub(&one());
            out = out.join(&Interval::new(r.neg(), r));
        }
        for (qpart, qpos) in [(&qn, false), (&qp, true)] {
            if qpart.is_bottom() {
                continue;
            }
            let (k1, k2) = magnitude(qpart);
            // |a| ranges over [k1*m1, k2*m2 + m2 - 1]; the sign of a is that of q*b
            let lo = k1.mul(&m1);
            let hi = k2.mul(&m2).add(&m2).sub(&one());
            let part = if qpos == bpos { Interval::new(lo, hi) } else { Interval::new(hi.neg(), lo.neg()) };
            out = out.join(&part);
        }
    }
    out
}

/// Hull of the nonzero integers `b` with `trunc(a / b) ∈ q` for some `a ∈ as_`.
fn div_divisor_inverse(q: &Interval, as_: &Interval) -> Interval {
    let (qn, qz, qp) = sign_parts(q);
    let (an, az, ap) = sign_parts(as_);
    if !qz.is_bottom() && !as_.is_bottom() {
        // a = 0, or |b| > |a|: no useful bound on b
        return Interval::top();
    }
    if !az.is_bottom() && qz.is_bottom() && an.is_bottom() && ap.is_bottom() {
        return Interval::bottom();
    }
    let mut out = Interval::bottom();
    for (apart, apos) in [(&an, false), (&ap, true)] {
        if apart.is_bottom() {
            continue;
        }
        let (n1, n2) = magnitude(apart);
        for (qpart, qpos) in [(&qn, false), (&qp, true)] {
            if qpart.is_bottom() {
                continue;
            }
            let (k1, k2) = magnitude(qpart);
            // |a| / (|q| + 1) < |b| <= |a| / |q|
            let lo = n1.div_floor_pos(&k2.add(&one())).add(&one());
            let hi = n2.div_floor_pos(&k1);
            let part = if apos == qpos { Interval::new(lo, hi) } else { Interval::new(hi.neg(), lo.neg()) };
            out = out.join(&part);
        }
    }
    out
}

/// Drops a zero endpoint, which can never be a divisor.
fn strip_zero_ends(i: &Interval) -> Interval {
    let Some((l, h)) = i.bounds() else {
        return Interval::bottom();
    };
    let zero = ExtInt::zero();
    let l = if *l == zero { one() } else { l.clone() };
    let h = if *h == zero { ExtInt::from(-1) } else { h.clone() };
    Interval::new(l, h)
}
