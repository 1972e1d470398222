//! Multi-indices in `N^d`, ordered by total degree and then lexicographically.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use smallvec::SmallVec;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u16; 4]>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        Self(SmallVec::from_elem(0, d))
    }

    pub fn unit(d: usize, j: usize) -> Self {
        let mut m = Self::zero(d);
        m.0[j] = 1;
        m
    }

    /// The diagonal index `(q, ..., q)`.
    pub fn diagonal(d: usize, q: u16) -> Self {
        Self(SmallVec::from_elem(q, d))
    }

    pub fn from_slice(e: &[u16]) -> Self {
        Self(SmallVec::from_slice(e))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u16 {
        self.0[j]
    }

    pub fn min_exponent(&self) -> u16 {
        self.0.iter().copied().min().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if `other <= self` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Self(out))
    }

    pub fn add_unit(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.0[j] += 1;
        m
    }

    pub fn sub_unit(&self, j: usize) -> Option<Self> {
        let mut m = self.clone();
        m.0[j] = m.0[j].checked_sub(1)?;
        Some(m)
    }

    /// Componentwise `self <= other`.
    pub fn le_componentwise(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `Some(q)` if this index equals `q * (1, ..., 1)`.
    pub fn diagonal_multiple(&self) -> Option<u16> {
        let q = *self.0.first()?;
        self.0.iter().all(|&e| e == q).then_some(q)
    }

    /// Whether `self = q * (1, ..., 1) + e_j` for some `q >= 0`.
    pub fn is_resonant_for(&self, j: usize) -> bool {
        self.sub_unit(j).and_then(|m| m.diagonal_multiple()).is_some()
    }

    /// Index of the last nonzero exponent.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.0.iter().rposition(|&e| e != 0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

/// All indices of total degree `n` in dimension `d`, in the crate order.
pub fn indices_of_degree(d: usize, n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if d == 0 {
        if n == 0 {
            out.push(MultiIndex::zero(0));
        }
        return out;
    }
    let mut cur = MultiIndex::zero(d);
    fill(&mut cur, 0, n, &mut out);
    out
}

fn fill(cur: &mut MultiIndex, pos: usize, left: usize, out: &mut Vec<MultiIndex>) {
    let d = cur.dim();
    if pos == d - 1 {
        cur.0[pos] = left as u16;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur.0[pos] = e as u16;
        fill(cur, pos + 1, left - e, out);
    }
    cur.0[pos] = 0;
}

/// All indices with `lo <= |a| <= hi`, in the crate order.
pub fn indices_in_range(d: usize, lo: usize, hi: usize) -> Vec<MultiIndex> {
    (lo..=hi).flat_map(|n| indices_of_degree(d, n)).collect()
}
