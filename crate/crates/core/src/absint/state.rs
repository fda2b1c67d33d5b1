use std::collections::BTreeMap;
use std::fmt;

use crate::contractor::BoxN;
use crate::interval::{ExtInt, Interval};
use crate::lang::Ident;

/// One interval per variable of a function.
///
/// An unreachable state has `reachable == false` and every interval Bottom;
/// setting any variable to Bottom collapses the whole state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractState {
    pub env: BTreeMap<Ident, Interval>,
    pub reachable: bool,
}

impl AbstractState {
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Interval)>,
        S: Into<Ident>,
    {
        let mut s = AbstractState { env: BTreeMap::new(), reachable: true };
        let mut any_bottom = false;
        for (v, i) in pairs {
            any_bottom |= i.is_bottom();
            s.env.insert(v.into(), i);
        }
        if any_bottom {
            s.make_bottom();
        }
        s
    }

    pub fn top<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Ident>,
    {
        AbstractState::new(vars.into_iter().map(|v| (v, Interval::top())))
    }

    pub fn bottom<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Ident>,
    {
        AbstractState::new(vars.into_iter().map(|v| (v, Interval::bottom())))
    }

    pub fn is_bottom(&self) -> bool {
        !self.reachable
    }

    pub fn make_bottom(&mut self) {
        self.reachable = false;
        for i in self.env.values_mut() {
            *i = Interval::bottom();
        }
    }

    /// The interval of `var`; panics on an unknown variable.
    pub fn get(&self, var: &str) -> &Interval {
        self.env.get(var).unwrap_or_else(|| panic!("unknown variable `{var}`"))
    }

    pub fn set(&mut self, var: &str, i: Interval) {
        assert!(self.env.contains_key(var), "unknown variable `{var}`");
        if !self.reachable {
            return;
        }
        if i.is_bottom() {
            self.make_bottom();
        } else {
            self.env.insert(var.to_string(), i);
        }
    }

    pub fn leq(&self, other: &AbstractState) -> bool {
        !self.reachable || (other.reachable && self.env.iter().all(|(v, i)| i.leq(other.get(v))))
    }

    fn pointwise(&self, other: &AbstractState, f: impl Fn(&Interval, &Interval) -> Interval) -> AbstractState {
        AbstractState::new(self.env.iter().map(|(v, i)| (v.clone(), f(i, other.get(v)))))
    }

    pub fn join(&self, other: &AbstractState) -> AbstractState {
        match (self.reachable, other.reachable) {
            (false, _) => other.clone(),
            (_, false) => self.clone(),
            _ => self.pointwise(other, Interval::join),
        }
    }

    pub fn meet(&self, other: &AbstractState) -> AbstractState {
        if !self.reachable || !other.reachable {
            return AbstractState::bottom(self.env.keys().cloned());
        }
        self.pointwise(other, Interval::meet)
    }

    pub fn widen(&self, new: &AbstractState) -> AbstractState {
        match (self.reachable, new.reachable) {
            (false, _) => new.clone(),
            (_, false) => self.clone(),
            _ => self.pointwise(new, Interval::widen),
        }
    }

    pub fn narrow(&self, new: &AbstractState) -> AbstractState {
        if !self.reachable || !new.reachable {
            return AbstractState::bottom(self.env.keys().cloned());
        }
        self.pointwise(new, Interval::narrow)
    }

    pub fn to_box(&self) -> BoxN {
        BoxN::new(self.env.iter().map(|(v, i)| (v.clone(), i.clone())))
    }

    /// Takes the ranges of the variables of `self` from `b`.
    pub fn with_box(&self, b: &BoxN) -> AbstractState {
        if b.is_empty() {
            return AbstractState::bottom(self.env.keys().cloned());
        }
        AbstractState::new(self.env.iter().map(|(v, i)| (v.clone(), b.get(v).cloned().unwrap_or_else(|| i.clone()))))
    }

    /// Number of finite bounds, a rough precision measure.
    pub fn finite_bounds(&self) -> usize {
        self.env
            .values()
            .filter_map(Interval::bounds)
            .map(|(l, h)| usize::from(*l != ExtInt::NegInf) + usize::from(*h != ExtInt::PosInf))
            .sum()
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.reachable {
            return f.write_str("bottom");
        }
        f.write_str("{")?;
        for (i, (v, r)) in self.env.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}:{r}")?;
        }
        f.write_str("}")
    }
}
