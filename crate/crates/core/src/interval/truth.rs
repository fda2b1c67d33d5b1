use std::fmt;

/// Three-valued truth used to decide guards. Connectives follow Kleene's
/// strong logic: `False` dominates conjunction, `True` dominates disjunction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truth3 {
    True,
    False,
    Maybe,
}

impl Truth3 {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth3::True
        } else {
            Truth3::False
        }
    }

    pub fn not(self) -> Self {
        if crate::fault::active(crate::fault::Fault::KleeneNotMaybe) && self == Truth3::Maybe {
            return Truth3::True;
        }
        match self {
            Truth3::True => Truth3::False,
            Truth3::False => Truth3::True,
            Truth3::Maybe => Truth3::Maybe,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Truth3::False, _) | (_, Truth3::False) => Truth3::False,
            (Truth3::True, Truth3::True) => Truth3::True,
            _ => Truth3::Maybe,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Truth3::True, _) | (_, Truth3::True) => Truth3::True,
            (Truth3::False, Truth3::False) => Truth3::False,
            _ => Truth3::Maybe,
        }
    }

    /// The definite boolean, if any.
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Truth3::True => Some(true),
            Truth3::False => Some(false),
            Truth3::Maybe => None,
        }
    }
}

/// Connectives accepted by [`truth3_logic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicOp {
    Not,
    And,
    Or,
}

/// Applies a connective; `b` must be present exactly when `op` is binary.
pub fn truth3_logic(op: LogicOp, a: Truth3, b: Option<Truth3>) -> Truth3 {
    match (op, b) {
        (LogicOp::Not, None) => a.not(),
        (LogicOp::And, Some(b)) => a.and(b),
        (LogicOp::Or, Some(b)) => a.or(b),
        (op, b) => panic!("arity mismatch for {op:?}: second operand {b:?}"),
    }
}

impl fmt::Display for Truth3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth3::True => "true",
            Truth3::False => "false",
            Truth3::Maybe => "maybe",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Truth3::*;

    #[test]
    fn spec_examples() {
        assert_eq!(truth3_logic(LogicOp::And, True, Some(Maybe)), Maybe);
        assert_eq!(truth3_logic(LogicOp::Or, True, Some(Maybe)), True);
        assert_eq!(truth3_logic(LogicOp::Not, False, None), True);
    }

    #[test]
    #[should_panic]
    fn binary_connective_needs_second_operand() {
        truth3_logic(LogicOp::And, True, None);
    }
}
