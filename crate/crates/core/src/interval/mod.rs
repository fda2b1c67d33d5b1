//! The non-relational integer interval domain.
//!
//! An [`Interval`] is either empty ([`Interval::bottom`]) or a closed range
//! `[lo, hi]` over [`ExtInt`]. Arithmetic is exact on the integer sets: the
//! result of `a op b` is the smallest interval containing every `x op y`.

mod ext_int;
mod truth;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use thiserror::Error;

use crate::fault::{self, Fault};

pub use ext_int::ExtInt;
pub use truth::{truth3_logic, LogicOp, Truth3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    /// The relation satisfied exactly when `self` is not.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The relation with its operands exchanged (`a < b` iff `b > a`).
    pub fn swap(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn holds(self, a: &BigInt, b: &BigInt) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

/// Whether arithmetic is evaluated precisely or extrapolated to Top.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ArithMode {
    #[default]
    Precise,
    /// Any arithmetic on a non-singleton operand yields Top.
    Extrapolate,
}

/// A closed integer interval with possibly infinite bounds, or the empty set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    bounds: Option<(ExtInt, ExtInt)>,
}

impl Interval {
    pub fn bottom() -> Self {
        Interval { bounds: None }
    }

    pub fn top() -> Self {
        Interval { bounds: Some((ExtInt::NegInf, ExtInt::PosInf)) }
    }

    /// Builds `[lo, hi]`, collapsing to Bottom when the range holds no integer.
    pub fn new(lo: ExtInt, hi: ExtInt) -> Self {
        if lo > hi || lo == ExtInt::PosInf || hi == ExtInt::NegInf {
            Interval::bottom()
        } else {
            Interval { bounds: Some((lo, hi)) }
        }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        Interval::new(lo.into(), hi.into())
    }

    pub fn singleton(v: BigInt) -> Self {
        Interval::new(ExtInt::Fin(v.clone()), ExtInt::Fin(v))
    }

    pub fn constant(v: i64) -> Self {
        Interval::range(v, v)
    }

    pub fn at_least(lo: ExtInt) -> Self {
        Interval::new(lo, ExtInt::PosInf)
    }

    pub fn at_most(hi: ExtInt) -> Self {
        Interval::new(ExtInt::NegInf, hi)
    }

    pub fn is_bottom(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn is_top(&self) -> bool {
        matches!(&self.bounds, Some((ExtInt::NegInf, ExtInt::PosInf)))
    }

    pub fn bounds(&self) -> Option<(&ExtInt, &ExtInt)> {
        self.bounds.as_ref().map(|(l, h)| (l, h))
    }

    pub fn lo(&self) -> Option<&ExtInt> {
        self.bounds.as_ref().map(|(l, _)| l)
    }

    pub fn hi(&self) -> Option<&ExtInt> {
        self.bounds.as_ref().map(|(_, h)| h)
    }

    pub fn is_finite(&self) -> bool {
        matches!(&self.bounds, Some((l, h)) if l.is_finite() && h.is_finite())
    }

    /// The single value of a singleton interval.
    pub fn singleton_value(&self) -> Option<&BigInt> {
        match &self.bounds {
            Some((ExtInt::Fin(l), ExtInt::Fin(h))) if l == h => Some(l),
            _ => None,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.singleton_value().is_some()
    }

    pub fn contains(&self, v: &BigInt) -> bool {
        match &self.bounds {
            None => false,
            Some((l, h)) => {
                let v = ExtInt::Fin(v.clone());
                *l <= v && v <= *h
            }
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigInt::from(0))
    }

    /// Inclusion order: `self ⊑ other`.
    pub fn leq(&self, other: &Interval) -> bool {
        match (&self.bounds, &other.bounds) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((l1, h1)), Some((l2, h2))) => l2 <= l1 && h1 <= h2,
        }
    }

    pub fn join(&self, other: &Interval) -> Interval {
        match (&self.bounds, &other.bounds) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some((l1, h1)), Some((l2, h2))) => {
                if fault::active(Fault::JoinDropsRight) {
                    return self.clone();
                }
                Interval::new(l1.min(l2).clone(), h1.max(h2).clone())
            }
        }
    }

    pub fn meet(&self, other: &Interval) -> Interval {
        match (&self.bounds, &other.bounds) {
            (Some((l1, h1)), Some((l2, h2))) => Interval::new(l1.max(l2).clone(), h1.min(h2).clone()),
            _ => Interval::bottom(),
        }
    }

    /// Extrapolation: any bound that grew jumps to the matching infinity.
    pub fn widen(&self, new: &Interval) -> Interval {
        match (&self.bounds, &new.bounds) {
            (None, _) => new.clone(),
            (_, None) => self.clone(),
            (Some((ol, oh)), Some((nl, nh))) => {
                if fault::active(Fault::WidenKeepsOld) {
                    return self.clone();
                }
                let lo = if nl < ol { ExtInt::NegInf } else { ol.clone() };
                let hi = if nh > oh { ExtInt::PosInf } else { oh.clone() };
                Interval::new(lo, hi)
            }
        }
    }

    /// Interpolation: infinite bounds of `self` are replaced by those of `new`.
    pub fn narrow(&self, new: &Interval) -> Interval {
        match (&self.bounds, &new.bounds) {
            (Some((ol, oh)), Some((nl, nh))) => {
                let lo = if *ol == ExtInt::NegInf { nl.clone() } else { ol.clone() };
                let hi = if *oh == ExtInt::PosInf { nh.clone() } else { oh.clone() };
                Interval::new(lo, hi)
            }
            _ => Interval::bottom(),
        }
    }

    pub fn neg(&self) -> Interval {
        match &self.bounds {
            None => Interval::bottom(),
            Some((l, h)) => Interval::new(h.neg(), l.neg()),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        match (&self.bounds, &other.bounds) {
            (Some((l1, h1)), Some((l2, h2))) => {
                let mut hi = h1.add(h2);
                if fault::active(Fault::AddHiOffByOne) {
                    hi = hi.sub(&ExtInt::from(1));
                }
                Interval::new(l1.add(l2), hi)
            }
            _ => Interval::bottom(),
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        if fault::active(Fault::SubSwapsBounds) {
            if let (Some((l1, h1)), Some((l2, h2))) = (&self.bounds, &other.bounds) {
                let (a, b) = (l1.sub(l2), h1.sub(h2));
                return Interval::new(a.clone().min(b.clone()), a.max(b));
            }
        }
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        match (&self.bounds, &other.bounds) {
            (Some((l1, h1)), Some((l2, h2))) => {
                let corners = if fault::active(Fault::MulIgnoresMixedCorners) {
                    vec![l1.mul(l2), h1.mul(h2)]
                } else {
                    vec![l1.mul(l2), l1.mul(h2), h1.mul(l2), h1.mul(h2)]
                };
                hull_of(corners)
            }
            _ => Interval::bottom(),
        }
    }

    /// Truncated integer division. Zero divisors contribute nothing, so a
    /// divisor of exactly `[0,0]` yields Bottom.
    pub fn div(&self, divisor: &Interval) -> Interval {
        let Some((nl, nh)) = self.bounds() else {
            return Interval::bottom();
        };
        let mut out = Interval::bottom();
        for part in divisor.split_nonzero() {
            let (dl, dh) = part.bounds().expect("non-empty part");
            let corners = [(nl, dl), (nl, dh), (nh, dl), (nh, dh)]
                .into_iter()
                .map(|(n, d)| {
                    if fault::active(Fault::DivFloors) && n.is_finite() && d.is_finite() {
                        let (n, d) = (n.as_finite().unwrap(), d.as_finite().unwrap());
                        ExtInt::Fin(num_integer::Integer::div_floor(n, d))
                    } else {
                        n.div_trunc(d)
                    }
                })
                .collect();
            out = out.join(&hull_of(corners));
        }
        out
    }

    /// The negative and positive parts of the interval, skipping zero.
    pub fn split_nonzero(&self) -> Vec<Interval> {
        let neg = self.meet(&Interval::at_most(ExtInt::from(-1)));
        let pos = self.meet(&Interval::at_least(ExtInt::from(1)));
        [neg, pos].into_iter().filter(|i| !i.is_bottom()).collect()
    }

    /// Width of a finite interval (`hi - lo`), if finite.
    pub fn width(&self) -> Option<BigInt> {
        match &self.bounds {
            Some((ExtInt::Fin(l), ExtInt::Fin(h))) => Some(h - l),
            _ => None,
        }
    }

    /// Iterates the members of a finite interval.
    pub fn iter_values(&self) -> impl Iterator<Item = BigInt> {
        let (lo, hi) = match &self.bounds {
            Some((ExtInt::Fin(l), ExtInt::Fin(h))) => (l.clone(), h.clone()),
            Some(_) => panic!("cannot enumerate an unbounded interval"),
            None => (BigInt::from(1), BigInt::from(0)),
        };
        num_iter_inclusive(lo, hi)
    }
}

fn num_iter_inclusive(lo: BigInt, hi: BigInt) -> impl Iterator<Item = BigInt> {
    let mut cur = lo;
    std::iter::from_fn(move || {
        if cur > hi {
            None
        } else {
            let v = cur.clone();
            cur += 1;
            Some(v)
        }
    })
}

fn hull_of(values: Vec<ExtInt>) -> Interval {
    let lo = values.iter().min().expect("non-empty").clone();
    let hi = values.iter().max().expect("non-empty").clone();
    Interval::new(lo, hi)
}

/// Interval arithmetic over integer sets.
pub fn interval_binop(op: ArithOp, a: &Interval, b: &Interval) -> Interval {
    match op {
        ArithOp::Add => a.add(b),
        ArithOp::Sub => a.sub(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Div => a.div(b),
    }
}

/// [`interval_binop`] under an arithmetic mode. In [`ArithMode::Extrapolate`]
/// every operation with a non-singleton operand returns Top.
pub fn interval_binop_mode(op: ArithOp, a: &Interval, b: &Interval, mode: ArithMode) -> Interval {
    if a.is_bottom() || b.is_bottom() {
        return Interval::bottom();
    }
    if mode == ArithMode::Extrapolate && !(a.is_singleton() && b.is_singleton()) {
        return Interval::top();
    }
    interval_binop(op, a, b)
}

/// Decides `x op y` for all `x ∈ a`, `y ∈ b`: `True` if it always holds,
/// `False` if it never does. Bottom operands give `Maybe`.
pub fn eval_cmp(op: CmpOp, a: &Interval, b: &Interval) -> Truth3 {
    let (Some((al, ah)), Some((bl, bh))) = (a.bounds(), b.bounds()) else {
        return Truth3::Maybe;
    };
    let lt_inclusive = fault::active(Fault::EvalCmpLtInclusive);
    let (always, never) = match op {
        CmpOp::Lt if lt_inclusive => (ah <= bl, al > bh),
        CmpOp::Lt => (ah < bl, al >= bh),
        CmpOp::Le => (ah <= bl, al > bh),
        CmpOp::Gt => return eval_cmp(CmpOp::Lt, b, a),
        CmpOp::Ge => return eval_cmp(CmpOp::Le, b, a),
        CmpOp::Eq => {
            let both_same_singleton = a.is_singleton() && a == b;
            (both_same_singleton, ah < bl || bh < al)
        }
        CmpOp::Ne => return eval_cmp(CmpOp::Eq, a, b).not(),
    };
    if always {
        Truth3::True
    } else if never {
        Truth3::False
    } else {
        Truth3::Maybe
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.bounds {
            None => f.write_str("bottom"),
            Some((l, h)) => write!(f, "[{l},{h}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid interval `{0}`: expected `[lo,hi]` or `bottom`")]
pub struct ParseIntervalError(pub String);

impl FromStr for Interval {
    type Err = ParseIntervalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseIntervalError(s.to_string());
        let t = s.trim();
        if t == "bottom" {
            return Ok(Interval::bottom());
        }
        let inner = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(err)?;
        let (l, h) = inner.split_once(',').ok_or_else(err)?;
        let lo = parse_bound(l.trim(), false).ok_or_else(err)?;
        let hi = parse_bound(h.trim(), true).ok_or_else(err)?;
        if lo > hi || lo == ExtInt::PosInf || hi == ExtInt::NegInf {
            return Err(err());
        }
        Ok(Interval::new(lo, hi))
    }
}

fn parse_bound(s: &str, upper: bool) -> Option<ExtInt> {
    match s {
        "-inf" => Some(ExtInt::NegInf),
        "+inf" => Some(ExtInt::PosInf),
        "inf" => Some(if upper { ExtInt::PosInf } else { ExtInt::NegInf }),
        _ => s.parse::<BigInt>().ok().map(ExtInt::Fin),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(lo: i64, hi: i64) -> Interval {
        Interval::range(lo, hi)
    }

    fn inf_hi(lo: i64) -> Interval {
        Interval::at_least(lo.into())
    }

    fn inf_lo(hi: i64) -> Interval {
        Interval::at_most(hi.into())
    }

    #[test]
    fn binop_examples() {
        assert_eq!(interval_binop(ArithOp::Add, &r(1, 2), &r(3, 4)), r(4, 6));
        assert_eq!(interval_binop(ArithOp::Mul, &r(-1, 2), &r(3, 4)), r(-4, 8));
        assert_eq!(interval_binop(ArithOp::Add, &r(0, 0), &r(-7, 11)), r(-7, 11));
        assert_eq!(interval_binop(ArithOp::Div, &r(1, 10), &r(-2, 3)), r(-10, 10));
    }

    #[test]
    fn division_by_exact_zero_is_bottom() {
        assert!(interval_binop(ArithOp::Div, &r(1, 10), &r(0, 0)).is_bottom());
        assert_eq!(interval_binop(ArithOp::Div, &r(1, 10), &r(0, 2)), r(0, 10));
    }

    #[test]
    fn bottom_operands_are_absorbing() {
        for op in [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div] {
            assert!(interval_binop(op, &Interval::bottom(), &r(1, 2)).is_bottom());
            assert!(interval_binop(op, &r(1, 2), &Interval::bottom()).is_bottom());
        }
    }

    #[test]
    fn infinite_products_use_zero_convention() {
        assert_eq!(r(0, 0).mul(&Interval::top()), r(0, 0));
        assert_eq!(r(0, 2).mul(&inf_hi(1)), inf_hi(0));
        assert_eq!(r(-1, 2).mul(&inf_hi(3)), Interval::top());
    }

    #[test]
    fn join_meet_examples() {
        assert_eq!(r(0, 1).join(&r(5, 6)), r(0, 6));
        assert_eq!(Interval::bottom().join(&r(2, 3)), r(2, 3));
        assert_eq!(inf_lo(0).join(&inf_hi(0)), Interval::top());
        assert_eq!(r(0, 5).meet(&r(3, 9)), r(3, 5));
        assert!(r(0, 1).meet(&r(2, 3)).is_bottom());
        assert_eq!(Interval::top().meet(&r(-4, 4)), r(-4, 4));
    }

    #[test]
    fn widen_narrow_examples() {
        assert_eq!(r(0, 5).widen(&r(0, 7)), inf_hi(0));
        assert_eq!(r(0, 5).widen(&r(-1, 5)), inf_lo(5));
        assert_eq!(r(0, 5).widen(&r(1, 4)), r(0, 5));
        assert_eq!(inf_hi(0).narrow(&r(0, 10)), r(0, 10));
        assert_eq!(r(0, 5).narrow(&r(1, 4)), r(0, 5));
        assert_eq!(Interval::top().narrow(&r(3, 7)), r(3, 7));
        assert!(r(0, 5).narrow(&Interval::bottom()).is_bottom());
        assert_eq!(Interval::bottom().widen(&r(1, 1)), r(1, 1));
    }

    #[test]
    fn eval_cmp_examples() {
        assert_eq!(eval_cmp(CmpOp::Gt, &r(4, 9), &r(3, 3)), Truth3::True);
        assert_eq!(eval_cmp(CmpOp::Lt, &r(4, 9), &r(10, 10)), Truth3::True);
        assert_eq!(eval_cmp(CmpOp::Eq, &r(5, 5), &r(5, 5)), Truth3::True);
        assert_eq!(eval_cmp(CmpOp::Lt, &r(0, 10), &r(5, 5)), Truth3::Maybe);
        assert_eq!(eval_cmp(CmpOp::Lt, &Interval::bottom(), &r(5, 5)), Truth3::Maybe);
        assert_eq!(eval_cmp(CmpOp::Ne, &r(0, 3), &r(7, 8)), Truth3::True);
        assert_eq!(eval_cmp(CmpOp::Ge, &inf_lo(-1), &r(0, 0)), Truth3::False);
    }

    #[test]
    fn extrapolate_mode_gives_top_for_ranges() {
        let m = ArithMode::Extrapolate;
        assert_eq!(interval_binop_mode(ArithOp::Add, &r(0, 3), &r(1, 1), m), Interval::top());
        assert_eq!(interval_binop_mode(ArithOp::Add, &r(2, 2), &r(1, 1), m), r(3, 3));
        assert!(interval_binop_mode(ArithOp::Add, &Interval::bottom(), &r(1, 1), m).is_bottom());
    }

    #[test]
    fn rendering_and_parsing() {
        assert_eq!(r(-1, 3).to_string(), "[-1,3]");
        assert_eq!(Interval::top().to_string(), "[-inf,+inf]");
        assert_eq!(Interval::bottom().to_string(), "bottom");
        assert_eq!("[ -inf , 4 ]".parse::<Interval>().unwrap(), inf_lo(4));
        assert_eq!("[0,inf]".parse::<Interval>().unwrap(), inf_hi(0));
        assert!("[3,1]".parse::<Interval>().is_err());
        assert!("3,1".parse::<Interval>().is_err());
    }

    #[test]
    fn invalid_ranges_collapse() {
        assert!(Interval::new(ExtInt::PosInf, ExtInt::PosInf).is_bottom());
        assert!(Interval::new(ExtInt::NegInf, ExtInt::NegInf).is_bottom());
        assert!(r(2, 1).is_bottom());
    }
}
