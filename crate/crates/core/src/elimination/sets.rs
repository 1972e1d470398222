use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::index::{indices_in_range, MultiIndex};

/// A set of exponents, decidable for every index.
#[derive(Clone, Debug, PartialEq)]
pub enum ExponentSet {
    Empty,
    /// `{β : lo <= |β| <= hi}`; `hi = None` means unbounded.
    DegreeRange {
        lo: usize,
        hi: Option<usize>,
    },
    /// `{β : |β| > above, min_j β_j = level}`.
    MinLevel {
        level: u16,
        above: usize,
    },
    Explicit(BTreeSet<MultiIndex>),
    Union(Vec<ExponentSet>),
    Difference(Box<ExponentSet>, Box<ExponentSet>),
}

impl ExponentSet {
    /// `{β : |β| <= n}` (including 0 and the linear indices).
    pub fn up_to_degree(n: usize) -> Self {
        Self::DegreeRange { lo: 0, hi: Some(n) }
    }

    /// `{β : |β| >= 2}`.
    pub fn nonlinear() -> Self {
        Self::DegreeRange { lo: 2, hi: None }
    }

    /// `A_k = {β : |β| > kd + 1, min_j β_j = k}`.
    pub fn level(k: u16, d: usize) -> Self {
        Self::MinLevel {
            level: k,
            above: k as usize * d + 1,
        }
    }

    /// Low-order block `{|β| <= ld + 1}` of the tail-pushing partition.
    pub fn tail_low(l: usize, d: usize) -> Self {
        Self::up_to_degree(l * d + 1)
    }

    /// Level `m` (1-based) of the tail-pushing partition: `{|β| > ld + 1, min β = m - 1}`.
    pub fn tail_level(m: u16, l: usize, d: usize) -> Self {
        Self::MinLevel {
            level: m - 1,
            above: l * d + 1,
        }
    }

    pub fn explicit(items: impl IntoIterator<Item = MultiIndex>) -> Self {
        Self::Explicit(items.into_iter().collect())
    }

    pub fn union(self, other: Self) -> Self {
        match self {
            Self::Empty => other,
            Self::Union(mut v) => {
                v.push(other);
                Self::Union(v)
            }
            s => Self::Union(alloc::vec![s, other]),
        }
    }

    pub fn minus(self, other: Self) -> Self {
        Self::Difference(Box::new(self), Box::new(other))
    }

    pub fn contains(&self, b: &MultiIndex) -> bool {
        match self {
            Self::Empty => false,
            Self::DegreeRange { lo, hi } => {
                let n = b.degree();
                n >= *lo && hi.is_none_or(|h| n <= h)
            }
            Self::MinLevel { level, above } => b.degree() > *above && b.min_exponent() == *level,
            Self::Explicit(s) => s.contains(b),
            Self::Union(v) => v.iter().any(|s| s.contains(b)),
            Self::Difference(a, c) => a.contains(b) && !c.contains(b),
        }
    }

    /// Members with `lo <= |β| <= hi`, in increasing order.
    pub fn members(&self, d: usize, lo: usize, hi: usize) -> Vec<MultiIndex> {
        indices_in_range(d, lo, hi)
            .into_iter()
            .filter(|b| self.contains(b))
            .collect()
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Empty => "empty",
            Self::DegreeRange { lo: 0, hi: Some(_) } => "low-order",
            Self::DegreeRange { .. } => "degree-range",
            Self::MinLevel { .. } => "level",
            Self::Explicit(_) => "explicit",
            Self::Union(_) => "union",
            Self::Difference(..) => "difference",
        }
    }
}
