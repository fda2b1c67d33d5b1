use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use thiserror::Error;

use crate::interval::Interval;
use crate::lang::Ident;

/// A product of intervals over an ordered set of variables.
///
/// A box is empty as soon as one of its ranges is Bottom; empty boxes are
/// kept in a canonical form with every range Bottom so that equality behaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxN {
    vars: Vec<Ident>,
    ranges: BTreeMap<Ident, Interval>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid box: {0}")]
pub struct ParseBoxError(pub String);

impl BoxN {
    /// A box over the given variables, in the given order. Later duplicates
    /// overwrite earlier ranges.
    pub fn new<I, S>(ranges: I) -> Self
    where
        I: IntoIterator<Item = (S, Interval)>,
        S: Into<Ident>,
    {
        let mut b = BoxN { vars: Vec::new(), ranges: BTreeMap::new() };
        for (v, r) in ranges {
            b.set(&v.into(), r);
        }
        b
    }

    /// Every variable unconstrained.
    pub fn top<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Ident>,
    {
        BoxN::new(vars.into_iter().map(|v| (v, Interval::top())))
    }

    pub fn vars(&self) -> &[Ident] {
        &self.vars
    }

    pub fn get(&self, var: &str) -> Option<&Interval> {
        self.ranges.get(var)
    }

    /// The range of `var`; panics if the box does not mention it.
    pub fn range(&self, var: &str) -> &Interval {
        self.ranges.get(var).unwrap_or_else(|| panic!("variable `{var}` is not in the box"))
    }

    /// Sets a range, adding the variable at the end if it is new.
    pub fn set(&mut self, var: &str, r: Interval) {
        if !self.ranges.contains_key(var) {
            self.vars.push(var.to_string());
            let fill = if self.is_empty() { Interval::bottom() } else { Interval::top() };
            self.ranges.insert(var.to_string(), fill);
        }
        if r.is_bottom() {
            self.make_empty();
        } else if !self.is_empty() {
            self.ranges.insert(var.to_string(), r);
        }
    }

    /// Meets the range of `var` with `r`. Returns whether it changed.
    pub fn restrict(&mut self, var: &str, r: &Interval) -> bool {
        let old = self.range(var);
        let new = old.meet(r);
        if &new == old {
            return false;
        }
        self.set(var, new);
        true
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.values().any(Interval::is_bottom)
    }

    pub fn make_empty(&mut self) {
        for r in self.ranges.values_mut() {
            *r = Interval::bottom();
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &Interval)> {
        self.vars.iter().map(move |v| (v, &self.ranges[v]))
    }

    /// Pointwise inclusion; the empty box is below everything.
    pub fn leq(&self, other: &BoxN) -> bool {
        self.is_empty()
            || self.iter().all(|(v, r)| r.leq(other.get(v).unwrap_or(&Interval::top())))
    }

    /// Pointwise hull over the variables of `self`.
    pub fn join(&self, other: &BoxN) -> BoxN {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        BoxN::new(self.iter().map(|(v, r)| (v.clone(), r.join(other.get(v).unwrap_or(&Interval::top())))))
    }

    pub fn meet(&self, other: &BoxN) -> BoxN {
        let mut out = self.clone();
        for (v, r) in other.iter() {
            if out.ranges.contains_key(v) {
                out.restrict(v, r);
            } else {
                out.set(v, r.clone());
            }
        }
        out
    }

    /// Whether an integer point lies in the box. Variables missing from
    /// `point` are unconstrained.
    pub fn contains_point(&self, point: &BTreeMap<Ident, BigInt>) -> bool {
        !self.is_empty()
            && self.iter().all(|(v, r)| point.get(v).is_none_or(|x| r.contains(x)))
    }

    /// All integer points of a finite box, in lexicographic order of `vars`.
    pub fn points(&self) -> Vec<BTreeMap<Ident, BigInt>> {
        let mut out = vec![BTreeMap::new()];
        if self.is_empty() {
            return Vec::new();
        }
        for (v, r) in self.iter() {
            let values: Vec<BigInt> = r.iter_values().collect();
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |x| {
                        let mut q = p.clone();
                        q.insert(v.clone(), x.clone());
                        q
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for BoxN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("empty");
        }
        for (i, (v, r)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}:{r}")?;
        }
        Ok(())
    }
}

/// Parses `x:[0,10], y:[-inf,4]`.
impl FromStr for BoxN {
    type Err = ParseBoxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BoxN::new(std::iter::empty::<(Ident, Interval)>());
        let mut rest = s.trim();
        while !rest.is_empty() {
            let (name, tail) =
                rest.split_once(':').ok_or_else(|| ParseBoxError(format!("expected `name:[lo,hi]` at `{rest}`")))?;
            let name = name.trim();
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(ParseBoxError(format!("bad variable name `{name}`")));
            }
            if out.ranges.contains_key(name) {
                return Err(ParseBoxError(format!("variable `{name}` listed twice")));
            }
            let tail = tail.trim_start();
            let close = tail.find(']').ok_or_else(|| ParseBoxError(format!("missing `]` after `{name}`")))?;
            let range: Interval = tail[..=close].parse().map_err(|e| ParseBoxError(format!("{name}: {e}")))?;
            out.set(name, range);
            rest = tail[close + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(ParseBoxError("trailing comma".into()));
                }
            } else if !rest.is_empty() {
                return Err(ParseBoxError(format!("expected `,` before `{rest}`")));
            }
        }
        Ok(out)
    }
}
