use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// An integer extended with the two infinities.
///
/// The derived order is the intended one: `NegInf < Fin(_) < PosInf`, with
/// finite values ordered numerically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtInt {
    NegInf,
    Fin(BigInt),
    PosInf,
}

impl ExtInt {
    pub fn zero() -> Self {
        ExtInt::Fin(BigInt::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtInt::Fin(_))
    }

    pub fn as_finite(&self) -> Option<&BigInt> {
        match self {
            ExtInt::Fin(v) => Some(v),
            _ => None,
        }
    }

    pub fn signum(&self) -> Ordering {
        match self {
            ExtInt::NegInf => Ordering::Less,
            ExtInt::PosInf => Ordering::Greater,
            ExtInt::Fin(v) => v.cmp(&BigInt::zero()),
        }
    }

    pub fn neg(&self) -> ExtInt {
        match self {
            ExtInt::NegInf => ExtInt::PosInf,
            ExtInt::PosInf => ExtInt::NegInf,
            ExtInt::Fin(v) => ExtInt::Fin(-v),
        }
    }

    /// Sum of two extended integers. `+inf + -inf` never arises from interval
    /// endpoints; it is resolved to zero so the function stays total.
    pub fn add(&self, other: &ExtInt) -> ExtInt {
        match (self, other) {
            (ExtInt::Fin(a), ExtInt::Fin(b)) => ExtInt::Fin(a + b),
            (ExtInt::PosInf, ExtInt::NegInf) | (ExtInt::NegInf, ExtInt::PosInf) => ExtInt::zero(),
            (ExtInt::PosInf, _) | (_, ExtInt::PosInf) => ExtInt::PosInf,
            (ExtInt::NegInf, _) | (_, ExtInt::NegInf) => ExtInt::NegInf,
        }
    }

    pub fn sub(&self, other: &ExtInt) -> ExtInt {
        self.add(&other.neg())
    }

    /// Product with the convention `0 * inf = 0`.
    pub fn mul(&self, other: &ExtInt) -> ExtInt {
        match (self, other) {
            (ExtInt::Fin(a), ExtInt::Fin(b)) => ExtInt::Fin(a * b),
            _ => match (self.signum(), other.signum()) {
                (Ordering::Equal, _) | (_, Ordering::Equal) => ExtInt::zero(),
                (a, b) if a == b => ExtInt::PosInf,
                _ => ExtInt::NegInf,
            },
        }
    }

    /// Truncated quotient for a divisor that is known to be non-zero.
    ///
    /// Infinite operands are resolved to the value of the limit taken along
    /// the corner of a box; `inf / inf` resolves to zero, which lies in the
    /// closure of every such quotient set.
    pub fn div_trunc(&self, divisor: &ExtInt) -> ExtInt {
        match (self, divisor) {
            (ExtInt::Fin(a), ExtInt::Fin(b)) => {
                debug_assert!(!b.is_zero());
                ExtInt::Fin(a / b)
            }
            (ExtInt::Fin(_), _) => ExtInt::zero(),
            (_, ExtInt::Fin(b)) => {
                if (self.signum() == Ordering::Greater) == b.is_positive() {
                    ExtInt::PosInf
                } else {
                    ExtInt::NegInf
                }
            }
            _ => ExtInt::zero(),
        }
    }

    /// Floor of `self / divisor` for a strictly positive divisor.
    pub fn div_floor_pos(&self, divisor: &ExtInt) -> ExtInt {
        match (self, divisor) {
            (ExtInt::Fin(a), ExtInt::Fin(b)) => ExtInt::Fin(a.div_floor(b)),
            (ExtInt::Fin(_), _) => ExtInt::zero(),
            (inf, ExtInt::Fin(_)) => inf.clone(),
            _ => ExtInt::zero(),
        }
    }

    /// Ceiling of `self / divisor` for a strictly positive divisor.
    pub fn div_ceil_pos(&self, divisor: &ExtInt) -> ExtInt {
        match (self, divisor) {
            (ExtInt::Fin(a), ExtInt::Fin(b)) => ExtInt::Fin(-((-a).div_floor(b))),
            (ExtInt::Fin(_), _) => ExtInt::zero(),
            (inf, ExtInt::Fin(_)) => inf.clone(),
            _ => ExtInt::zero(),
        }
    }

    pub fn abs(&self) -> ExtInt {
        match self {
            ExtInt::Fin(v) => ExtInt::Fin(v.abs()),
            _ => ExtInt::PosInf,
        }
    }
}

impl From<i64> for ExtInt {
    fn from(v: i64) -> Self {
        ExtInt::Fin(BigInt::from(v))
    }
}

impl From<BigInt> for ExtInt {
    fn from(v: BigInt) -> Self {
        ExtInt::Fin(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::NegInf => f.write_str("-inf"),
            ExtInt::PosInf => f.write_str("+inf"),
            ExtInt::Fin(v) => write!(f, "{v}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: i64) -> ExtInt {
        ExtInt::from(v)
    }

    #[test]
    fn order_puts_infinities_at_the_ends() {
        assert!(ExtInt::NegInf < e(i64::MIN));
        assert!(e(i64::MAX) < ExtInt::PosInf);
        assert!(e(-3) < e(2));
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(e(0).mul(&ExtInt::PosInf), e(0));
        assert_eq!(ExtInt::NegInf.mul(&e(0)), e(0));
        assert_eq!(ExtInt::NegInf.mul(&e(-2)), ExtInt::PosInf);
        assert_eq!(ExtInt::NegInf.mul(&ExtInt::PosInf), ExtInt::NegInf);
    }

    #[test]
    fn truncated_division_rounds_toward_zero() {
        assert_eq!(e(-7).div_trunc(&e(2)), e(-3));
        assert_eq!(e(7).div_trunc(&e(-2)), e(-3));
        assert_eq!(e(5).div_trunc(&ExtInt::PosInf), e(0));
        assert_eq!(ExtInt::NegInf.div_trunc(&e(-1)), ExtInt::PosInf);
    }

    #[test]
    fn floor_and_ceil_division() {
        assert_eq!(e(-7).div_floor_pos(&e(2)), e(-4));
        assert_eq!(e(-7).div_ceil_pos(&e(2)), e(-3));
        assert_eq!(e(7).div_ceil_pos(&e(2)), e(4));
        assert_eq!(ExtInt::PosInf.div_ceil_pos(&e(3)), ExtInt::PosInf);
    }
}
