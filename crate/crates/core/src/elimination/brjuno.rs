use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::ExponentSet;
use crate::error::{Error, Result};
use crate::germs::Multipliers;
use crate::index::{indices_of_degree, MultiIndex};

/// Divisors below this are exact resonances.
pub const ZERO_DIVISOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct BrjunoLevel {
    /// `m`, with the bound `2^m` on `|α|`.
    pub m: u32,
    pub omega: f64,
    /// Minimizing `(α, i)`; `None` when the minimum is the `1` of the definition.
    pub witness: Option<(MultiIndex, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrjunoReport {
    pub levels: Vec<BrjunoLevel>,
}

impl BrjunoReport {
    pub fn omega_values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.omega).collect()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        brjuno_partial_sums(self).sums
    }
}

/// `ω_A(2^m) = min({|λ^α - λ_i| : α ∈ A, 2 <= |α| <= 2^m} ∪ {1})` for `m = 1..=levels`.
pub fn brjuno_omega(mult: &Multipliers, a: &ExponentSet, levels: u32) -> Result<BrjunoReport> {
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one level"));
    }
    let d = mult.dim();
    let mut best = 1.0;
    let mut witness = None;
    let mut out = Vec::with_capacity(levels as usize);
    let mut done = 1usize;
    for m in 1..=levels {
        let bound = 1usize << m;
        for n in done + 1..=bound {
            for idx in indices_of_degree(d, n) {
                if !a.contains(&idx) {
                    continue;
                }
                for i in 0..d {
                    let e = mult.divisor(&idx, i);
                    if e < ZERO_DIVISOR {
                        return Err(Error::ZeroDivisor {
                            exponent: idx,
                            component: i,
                        });
                    }
                    if e < best {
                        best = e;
                        witness = Some((idx.clone(), i));
                    }
                }
            }
        }
        done = bound;
        out.push(BrjunoLevel {
            m,
            omega: best,
            witness: witness.clone(),
        });
    }
    Ok(BrjunoReport { levels: out })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialSums {
    /// `S_1..S_M`.
    pub sums: Vec<f64>,
    /// `2^{-m} log ω^{-1}(2^m)`.
    pub increments: Vec<f64>,
    /// Increments are non-increasing from `m = 3` on.
    pub decaying: bool,
}

impl PartialSums {
    /// Whether increments strictly decrease over `m` in `lo..=hi` (1-based).
    pub fn strictly_decreasing(&self, lo: usize, hi: usize) -> bool {
        (lo.max(2)..=hi.min(self.increments.len())).all(|m| self.increments[m - 1] < self.increments[m - 2])
    }
}

pub fn brjuno_partial_sums(report: &BrjunoReport) -> PartialSums {
    let increments: Vec<f64> = report
        .levels
        .iter()
        .map(|l| -l.omega.ln() / f64::from(1u32 << l.m.min(31)))
        .collect();
    let mut acc = 0.0;
    let sums = increments
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    let decaying = increments.windows(2).skip(1).all(|w| w[1] <= w[0]);
    PartialSums {
        sums,
        increments,
        decaying,
    }
}
