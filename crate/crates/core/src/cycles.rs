//! Root germs `F_p(z) = M_p z (1 + a u^k + b u^{2k})` whose `p`-th iterate agrees with
//! `F_0(z) = Λz(1 + c u^k)` up to `O(z^{3kα})`, and the basin permutation they induce.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::basins::{in_basin, BasinParams};
use crate::error::{Error, Result};
use crate::germs::{GermSpec, Multipliers};
use crate::index::MultiIndex;
use crate::orbits::OrbitMap;
use crate::sampling::Halton;
use crate::series::{compose, TruncatedSeriesMap};

#[derive(Clone, Debug, PartialEq)]
pub struct RootGermSpec {
    pub base: GermSpec,
    pub p: usize,
    /// `μ_j = e^{2πi mu_angles[j]}`.
    pub mu_angles: Vec<f64>,
    pub a: Complex64,
    pub b: Complex64,
}

/// Integer closest to `x` in `(-p/2, p/2]` congruent to `x` mod `p`.
fn centered_residue(x: i64, p: i64) -> i64 {
    let r = x.rem_euclid(p);
    if 2 * r > p {
        r - p
    } else {
        r
    }
}

pub fn make_root_germ(base: &GermSpec, p: usize) -> Result<RootGermSpec> {
    let k = base.k();
    if p == 0 || !k.is_multiple_of(p) {
        return Err(Error::NotADivisor { p, k });
    }
    let d = base.dim();
    let theta = base.multipliers().angles();
    let s = theta.iter().sum::<f64>().round() as i64;
    let mut offsets = vec![0i64; d];
    offsets[d - 1] = centered_residue(1 - s, p as i64);
    let pf = p as f64;
    let mu_angles = theta.iter().zip(&offsets).map(|(&t, &o)| (t + o as f64) / pf).collect();
    let c = -1.0 / base.m() as f64;
    let a = Complex64::new(c / pf, 0.0);
    let b = -((pf - 1.0) / 2.0) * a * a * (base.m() + 1) as f64;
    Ok(RootGermSpec {
        base: base.clone(),
        p,
        mu_angles,
        a,
        b,
    })
}

impl RootGermSpec {
    pub fn dim(&self) -> usize {
        self.mu_angles.len()
    }

    pub fn k(&self) -> usize {
        self.base.k()
    }

    pub fn mu(&self) -> Vec<Complex64> {
        self.mu_angles
            .iter()
            .map(|&t| Complex64::from_polar(1.0, 2.0 * PI * (t - t.floor())))
            .collect()
    }

    /// `M_p` as a multiplier table; its product is `ζ_p`, not 1.
    pub fn multipliers(&self) -> Multipliers {
        Multipliers::unchecked(self.mu_angles.clone())
    }

    /// `max_j |μ_j^p/λ_j - 1|` and `|Πμ_j/ζ_p - 1|`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let mu = self.multipliers();
        let lam = self.base.multipliers();
        let p = self.p as i64;
        let pow = (0..self.dim())
            .map(|j| (mu.lambda_power(j, p) / lam.lambda(j) - 1.0).norm())
            .fold(0.0, f64::max);
        let prod: Complex64 = self.mu().iter().product();
        let zeta = Complex64::from_polar(1.0, 2.0 * PI / self.p as f64);
        (pow, (prod / zeta - 1.0).norm())
    }

    pub fn series(&self, cap: usize) -> TruncatedSeriesMap {
        let d = self.dim();
        let k = self.k() as u16;
        let mut s = TruncatedSeriesMap::zero(d, cap);
        for (j, mu) in self.mu().into_iter().enumerate() {
            let e = MultiIndex::unit(d, j);
            s.add_term(e.clone(), j, mu);
            s.add_term(MultiIndex::diagonal(d, k).add_unit(j), j, mu * self.a);
            s.add_term(MultiIndex::diagonal(d, 2 * k).add_unit(j), j, mu * self.b);
        }
        s.truncated(cap)
    }

    pub fn evaluate_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let uk = z.iter().product::<Complex64>().powu(self.k() as u32);
        let factor = 1.0 + self.a * uk + self.b * uk * uk;
        for ((o, &zj), mu) in out.iter_mut().zip(z).zip(self.mu()) {
            *o = mu * zj * factor;
        }
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
        self.evaluate_into(z, &mut out);
        out
    }
}

/// Coefficients of `F_p^m(z) = M_p^m z (1 + a_m u^k + b_m u^{2k}) + ...` read off the
/// composed series, next to the closed forms `a_m = ma` and
/// `b_m = mb + (m(m-1)/2) a² (kd+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateCoefficients {
    pub m: usize,
    pub a_m: Complex64,
    pub b_m: Complex64,
    pub a_closed: Complex64,
    pub b_closed: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootReport {
    /// Verification degree `3kd - 1`.
    pub degree: usize,
    /// Max coefficient deviation of `F_p^p` from the normal form of `F_0`.
    pub max_deviation: f64,
    /// Largest tail coefficient of `F_0` through `degree`, the part a conjugation must absorb.
    pub tail_below_degree: f64,
    pub iterates: Vec<IterateCoefficients>,
}

/// Composes `F_p` with itself `p` times through total degree `min(cap, 3kd - 1)`.
pub fn verify_root(root: &RootGermSpec, cap: usize) -> Result<RootReport> {
    let d = root.dim();
    let k = root.k();
    let degree = cap.min(3 * k * d - 1);
    let f = root.series(degree);
    let res = MultiIndex::diagonal(d, k as u16);
    let res2 = MultiIndex::diagonal(d, 2 * k as u16);
    let mu = root.multipliers();
    let kd1 = (k * d + 1) as f64;
    let mut iterates = Vec::new();
    let mut it = f.clone();
    let mut power = f.clone();
    for m in 1..=root.p.max(3) {
        if m > 1 {
            it = compose(&f, &it, degree)?;
        }
        if m == root.p {
            power = it.clone();
        }
        let scale = mu.lambda_power(0, m as i64);
        let mf = m as f64;
        iterates.push(IterateCoefficients {
            m,
            a_m: it.get(&res.add_unit(0), 0) / scale,
            b_m: it.get(&res2.add_unit(0), 0) / scale,
            a_closed: root.a * mf,
            b_closed: root.b * mf + (mf * (mf - 1.0) / 2.0) * root.a * root.a * kd1,
        });
    }
    let target = root.base.normal_form_series(degree);
    let max_deviation = power.sub(&target).max_abs(degree);
    let tail_below_degree = root.base.tail().max_abs(degree);
    Ok(RootReport {
        degree,
        max_deviation,
        tail_below_degree,
        iterates,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermutationReport {
    /// `k/p`.
    pub shift: usize,
    /// Most frequent basin of `F_p(z)` for samples of `B_h`.
    pub targets: Vec<Option<usize>>,
    /// Samples of `B_h` used.
    pub samples: Vec<usize>,
    /// Fraction landing in `B_{h + k/p mod k}`.
    pub success: Vec<f64>,
}

impl PermutationReport {
    /// Cycle decomposition of `h ↦ targets[h]`; `None` if it is not a permutation.
    pub fn cycles(&self) -> Option<Vec<Vec<usize>>> {
        let t: Vec<usize> = self.targets.iter().copied().collect::<Option<_>>()?;
        let mut seen = vec![false; t.len()];
        for &x in &t {
            if x >= t.len() || core::mem::replace(&mut seen[x], true) {
                return None;
            }
        }
        let mut visited = vec![false; t.len()];
        let mut out = Vec::new();
        for s in 0..t.len() {
            if visited[s] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut h = s;
            while !visited[h] {
                visited[h] = true;
                cyc.push(h);
                h = t[h];
            }
            out.push(cyc);
        }
        Some(out)
    }

    pub fn min_success(&self) -> f64 {
        self.success.iter().copied().fold(1.0, f64::min)
    }
}

/// Relative size of the perturbations around `z_r`.
pub const PERMUTATION_SPREAD: f64 = 0.1;

/// Samples `B_h` near `z_r = (r, .., r, ζ_k^h r)` and records where `F_p` sends them.
/// `basins[h]` must be certified for `F_0`.
pub fn basin_permutation_check(
    root: &RootGermSpec,
    basins: &[BasinParams],
    r: f64,
    samples: usize,
) -> Result<PermutationReport> {
    let k = root.k();
    let d = root.dim();
    if basins.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: basins.len(),
        });
    }
    let shift = k / root.p;
    let mut rep = PermutationReport {
        shift,
        targets: Vec::with_capacity(k),
        samples: Vec::with_capacity(k),
        success: Vec::with_capacity(k),
    };
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for (h, p) in basins.iter().enumerate() {
        let mut center = vec![Complex64::new(r, 0.0); d];
        center[d - 1] = Complex64::from_polar(r, 2.0 * PI * h as f64 / k as f64);
        let mut counts = vec![0usize; k + 1];
        let mut used = 0;
        let mut seq = Halton::new(2 * d);
        let mut budget = 100 * samples + 100;
        while used < samples && budget > 0 {
            budget -= 1;
            let x = seq.next_point();
            let z: Vec<Complex64> = center
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let s = 1.0 + PERMUTATION_SPREAD * (2.0 * x[2 * j] - 1.0);
                    c * Complex64::from_polar(s, PERMUTATION_SPREAD * (2.0 * x[2 * j + 1] - 1.0))
                })
                .collect();
            if !in_basin(&z, p).is_in() {
                continue;
            }
            used += 1;
            root.evaluate_into(&z, &mut out);
            let hit = (0..k).find(|&g| in_basin(&out, &p.with_sector(g)).is_in());
            counts[hit.unwrap_or(k)] += 1;
        }
        let expected = (h + shift) % k;
        let best = (0..k).max_by_key(|&g| counts[g]).filter(|&g| counts[g] > 0);
        rep.targets.push(best);
        rep.samples.push(used);
        rep.success.push(if used == 0 {
            0.0
        } else {
            counts[expected] as f64 / used as f64
        });
    }
    Ok(rep)
}

/// `(z, w) ↦ (F(z), w/2)` on `C^{d+extra}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGerm {
    pub germ: GermSpec,
    pub extra: usize,
}

pub fn product_extension(germ: &GermSpec, extra: usize) -> Result<ProductGerm> {
    if extra == 0 {
        return Err(Error::InvalidParameter("extra must be at least 1"));
    }
    Ok(ProductGerm {
        germ: germ.clone(),
        extra,
    })
}

impl OrbitMap for ProductGerm {
    fn dim(&self) -> usize {
        self.germ.dim() + self.extra
    }

    fn resonant_dim(&self) -> usize {
        self.germ.dim()
    }

    fn order(&self) -> usize {
        self.germ.k()
    }

    fn preserves_hyperplanes(&self) -> bool {
        !self.germ.has_tail()
    }

    fn step(&self, z: &[Complex64], out: &mut [Complex64]) {
        let d = self.germ.dim();
        self.germ.evaluate_into(&z[..d], &mut out[..d]);
        for (o, w) in out[d..].iter_mut().zip(&z[d..]) {
            *o = w * 0.5;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_residues() {
        assert_eq!(centered_residue(1, 2), 1);
        assert_eq!(centered_residue(1, 1), 0);
        assert_eq!(centered_residue(3, 4), -1);
        assert_eq!(centered_residue(-1, 3), -1);
    }
}
