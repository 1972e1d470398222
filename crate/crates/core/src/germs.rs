//! Multipliers, the normal form `Λz(1 - u^k/(kd))` and its perturbations.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::index::{indices_in_range, MultiIndex};
use crate::series::TruncatedSeriesMap;

/// Tolerance for "is an integer" in the resonance scans.
pub const SCAN_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SCAN_DEGREE: u32 = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum AngleScheme {
    /// `Sqrt2` for `d = 2`, `SqrtPrimes` otherwise.
    Default,
    /// `(sqrt 2, -sqrt 2)`.
    Sqrt2,
    /// `frac(sqrt p_j)` for the first `d - 1` primes, last angle closes the sum.
    SqrtPrimes,
    Explicit(Vec<f64>),
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

impl AngleScheme {
    pub fn angles(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            Self::Default if d == 2 => Self::Sqrt2.angles(d),
            Self::Default => Self::SqrtPrimes.angles(d),
            Self::Sqrt2 => {
                if d != 2 {
                    return Err(Error::InvalidDimension(d));
                }
                let s = 2f64.sqrt();
                Ok(vec![s, -s])
            }
            Self::SqrtPrimes => {
                if d < 2 || d > PRIMES.len() + 1 {
                    return Err(Error::InvalidDimension(d));
                }
                let mut a: Vec<f64> = PRIMES[..d - 1].iter().map(|&p| frac(f64::from(p).sqrt())).collect();
                let s: f64 = a.iter().sum();
                a.push(-s);
                Ok(a)
            }
            Self::Explicit(a) => {
                if a.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: a.len(),
                    });
                }
                Ok(a.clone())
            }
        }
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `Λ = diag(e^{2πiθ_j})`, stored through the angles.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipliers {
    angles: Vec<f64>,
    lambdas: Vec<Complex64>,
    scan_degree: u32,
}

pub fn make_multipliers(d: usize, scheme: &AngleScheme, scan_degree: u32) -> Result<Multipliers> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let angles = scheme.angles(d)?;
    let sum: f64 = angles.iter().sum();
    if dist_to_integer(sum) > 1e-12 {
        return Err(Error::ProductNotOne(sum));
    }
    check_roots_of_unity(&angles, scan_degree)?;
    resonance_scan(&angles, scan_degree)?;
    Ok(Multipliers::build(angles, scan_degree))
}

fn check_roots_of_unity(angles: &[f64], n: u32) -> Result<()> {
    for (j, &t) in angles.iter().enumerate() {
        for q in 1..=n.max(1) {
            if dist_to_integer(f64::from(q) * t) < SCAN_TOLERANCE {
                return Err(Error::RootOfUnity { component: j, order: q });
            }
        }
    }
    Ok(())
}

/// Brute-force scan: `λ^m = λ_j` with `|m| <= n` only for `m = qα + e_j`.
pub fn resonance_scan(angles: &[f64], n: u32) -> Result<()> {
    let d = angles.len();
    for m in indices_in_range(d, 0, n as usize) {
        let s: f64 = m.exponents().iter().zip(angles).map(|(&e, &t)| f64::from(e) * t).sum();
        for (j, &t) in angles.iter().enumerate() {
            if dist_to_integer(s - t) < SCAN_TOLERANCE && !m.is_resonant_for(j) {
                return Err(Error::ExtraResonance {
                    exponent: m,
                    component: j,
                });
            }
        }
    }
    Ok(())
}

impl Multipliers {
    fn build(angles: Vec<f64>, scan_degree: u32) -> Self {
        let lambdas = angles.iter().map(|&t| unit(frac(t))).collect();
        Self {
            angles,
            lambdas,
            scan_degree,
        }
    }

    /// Skips every check; meant for arithmetic oracles (`λ_j = 1`, `d = 1`).
    pub fn unchecked(angles: Vec<f64>) -> Self {
        Self::build(angles, 0)
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn lambda(&self, j: usize) -> Complex64 {
        self.lambdas[j]
    }

    pub fn scan_degree(&self) -> u32 {
        self.scan_degree
    }

    /// `λ^α`, computed from the angle sum.
    pub fn power(&self, idx: &MultiIndex) -> Complex64 {
        let s: f64 = idx
            .exponents()
            .iter()
            .zip(&self.angles)
            .map(|(&e, &t)| f64::from(e) * frac(t))
            .sum();
        unit(frac(s))
    }

    /// `λ_j^n` with the phase `nθ_j` reduced exactly.
    pub fn lambda_power(&self, j: usize, n: i64) -> Complex64 {
        let t = frac(self.angles[j]);
        let nf = n as f64;
        let p = nf * t;
        let e = nf.mul_add(t, -p);
        unit(frac(p) + e)
    }

    /// `|λ^α - λ_i|`, via `2|sin(π(α·θ - θ_i))|`.
    pub fn divisor(&self, idx: &MultiIndex, i: usize) -> f64 {
        let s: f64 = idx
            .exponents()
            .iter()
            .zip(&self.angles)
            .map(|(&e, &t)| f64::from(e) * frac(t))
            .sum::<f64>()
            - frac(self.angles[i]);
        2.0 * (PI * (s - s.round())).sin().abs()
    }

    /// `ε_α = min_i |λ^α - λ_i|` and the minimizing `i`.
    pub fn min_divisor(&self, idx: &MultiIndex) -> (f64, usize) {
        (0..self.dim())
            .map(|i| (self.divisor(idx, i), i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// Principal logarithm of `λ_j`, with imaginary part in `(-π, π]`.
    pub fn log_lambda(&self, j: usize) -> Complex64 {
        let mut t = frac(self.angles[j]);
        if t > 0.5 {
            t -= 1.0;
        }
        Complex64::new(0.0, 2.0 * PI * t)
    }
}

fn monomial(z: &[Complex64], e: &[u32]) -> Complex64 {
    z.iter().zip(e).map(|(zi, &p)| zi.powu(p)).product()
}

fn unit(t: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, s)
}

/// `F = F_N + tail`, with `F_N(z)_j = λ_j z^j (1 - u^k/(kd))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GermSpec {
    multipliers: Multipliers,
    k: usize,
    l: usize,
    tail: TruncatedSeriesMap,
    /// Tail terms for pointwise evaluation.
    terms: Vec<TailTerm>,
}

#[derive(Clone, Debug, PartialEq)]
struct TailTerm {
    exponent: Vec<u32>,
    component: usize,
    coeff: Complex64,
    /// `frac(α·θ - θ_j)`, the phase of the term in the rotating frame.
    drift: f64,
    /// `λ_j^{-1}`.
    back: Complex64,
    /// `e^{2πi·drift}`.
    step: Complex64,
}

/// Steps between exact recomputations of the tail phases in [`RotatingOrbit`].
const PHASE_RESYNC: u64 = 256;

/// `w_n = Λ^{-n} F^n(z)`, with tail phases advanced by recurrence.
#[derive(Clone, Debug)]
pub struct RotatingOrbit<'a> {
    germ: &'a GermSpec,
    w: Vec<Complex64>,
    next: Vec<Complex64>,
    n: u64,
    phases: Vec<Complex64>,
}

impl RotatingOrbit<'_> {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn point(&self) -> &[Complex64] {
        &self.w
    }

    pub fn advance(&mut self) {
        let g = self.germ;
        g.rotating_core(&self.w, &mut self.next);
        if !g.terms.is_empty() {
            if self.n.is_multiple_of(PHASE_RESYNC) {
                self.phases.clear();
                let n = self.n as i64;
                self.phases
                    .extend(g.terms.iter().map(|t| turn_multiple(t.drift, n) * t.back));
            }
            for (t, ph) in g.terms.iter().zip(self.phases.iter_mut()) {
                self.next[t.component] += t.coeff * *ph * monomial(&self.w, &t.exponent);
                *ph *= t.step;
            }
        }
        core::mem::swap(&mut self.w, &mut self.next);
        self.n += 1;
    }
}

fn flatten(tail: &TruncatedSeriesMap, angles: &[f64]) -> Vec<TailTerm> {
    let mut out = Vec::new();
    for (idx, v) in tail.iter() {
        let e: Vec<u32> = idx.exponents().iter().map(|&x| u32::from(x)).collect();
        let s: f64 = e.iter().zip(angles).map(|(&a, &t)| f64::from(a) * frac(t)).sum();
        for (j, c) in v.iter().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                out.push(TailTerm {
                    exponent: e.clone(),
                    component: j,
                    coeff: *c,
                    drift: frac(s - frac(angles[j])),
                    back: unit(-frac(angles[j])),
                    step: unit(frac(s - frac(angles[j]))),
                });
            }
        }
    }
    out
}

/// `e^{2πi n t}` with the phase `nt` reduced exactly.
fn turn_multiple(t: f64, n: i64) -> Complex64 {
    let nf = n as f64;
    let p = nf * t;
    let e = nf.mul_add(t, -p);
    unit(frac(p) + e)
}

pub fn make_normal_form(mult: Multipliers, k: usize) -> GermSpec {
    let d = mult.dim();
    let l = 2 * k * d + 2;
    GermSpec {
        multipliers: mult,
        k: k.max(1),
        l,
        tail: TruncatedSeriesMap::zero(d, l),
        terms: Vec::new(),
    }
}

pub fn make_perturbed(base: &GermSpec, tail: TruncatedSeriesMap, l: usize) -> Result<GermSpec> {
    let d = base.dim();
    if tail.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: tail.dim(),
        });
    }
    if l <= 2 * base.k * d + 1 {
        return Err(Error::InvalidParameter("tail order must exceed 2kd+1"));
    }
    if let Some((idx, _)) = tail.iter().find(|(idx, _)| idx.degree() < l) {
        return Err(Error::TailTooLow {
            exponent: idx.clone(),
            degree: idx.degree(),
            min: l,
        });
    }
    Ok(GermSpec {
        multipliers: base.multipliers.clone(),
        k: base.k,
        l,
        terms: flatten(&tail, &base.multipliers.angles),
        tail,
    })
}

impl GermSpec {
    pub fn dim(&self) -> usize {
        self.multipliers.dim()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn multipliers(&self) -> &Multipliers {
        &self.multipliers
    }

    pub fn tail(&self) -> &TruncatedSeriesMap {
        &self.tail
    }

    pub fn has_tail(&self) -> bool {
        !self.tail.is_empty()
    }

    /// `kd`.
    pub fn m(&self) -> usize {
        self.k * self.dim()
    }

    /// The logarithmic constant `c = -(kd+1)/(2kd)` of the Fatou coordinate.
    pub fn drift_constant(&self) -> f64 {
        let m = self.m() as f64;
        -(m + 1.0) / (2.0 * m)
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
        self.evaluate_into(z, &mut out);
        out
    }

    pub fn evaluate_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let u: Complex64 = z.iter().product();
        let factor = Complex64::new(1.0, 0.0) - u.powu(self.k as u32) / (self.m() as f64);
        for ((o, &zj), &lj) in out.iter_mut().zip(z).zip(&self.multipliers.lambdas) {
            *o = lj * zj * factor;
        }
        for t in &self.terms {
            out[t.component] += t.coeff * monomial(z, &t.exponent);
        }
    }

    /// One step in the rotating frame `w = Λ^{-n} z`: maps `w_n` to `w_{n+1}`.
    /// The normal form acts as `w ↦ w (1 - u^k/(kd))` with `u = w¹⋯w^d`, free of the
    /// rounding in `λ_j`.
    pub fn rotating_step(&self, n: u64, w: &[Complex64], out: &mut [Complex64]) {
        self.rotating_core(w, out);
        let n = n as i64;
        for t in &self.terms {
            let phase = turn_multiple(t.drift, n) * t.back;
            out[t.component] += t.coeff * phase * monomial(w, &t.exponent);
        }
    }

    fn rotating_core(&self, w: &[Complex64], out: &mut [Complex64]) {
        let u: Complex64 = w.iter().product();
        let factor = Complex64::new(1.0, 0.0) - u.powu(self.k as u32) / (self.m() as f64);
        for (o, &wj) in out.iter_mut().zip(w) {
            *o = wj * factor;
        }
    }

    /// Orbit iterator in the rotating frame starting at `z`.
    pub fn rotating_orbit(&self, z: &[Complex64]) -> RotatingOrbit<'_> {
        RotatingOrbit {
            germ: self,
            w: z.to_vec(),
            next: z.to_vec(),
            n: 0,
            phases: Vec::new(),
        }
    }

    pub fn normal_form_series(&self, cap: usize) -> TruncatedSeriesMap {
        let d = self.dim();
        let mut s = TruncatedSeriesMap::zero(d, cap);
        let res = MultiIndex::diagonal(d, self.k as u16);
        let c = -1.0 / self.m() as f64;
        for j in 0..d {
            let lj = self.multipliers.lambda(j);
            s.add_term(MultiIndex::unit(d, j), j, lj);
            s.add_term(res.add_unit(j), j, lj * c);
        }
        s
    }

    pub fn to_series(&self, cap: usize) -> TruncatedSeriesMap {
        self.normal_form_series(cap)
            .add(&self.tail.clone().with_cap(cap).truncated(cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_angles_are_rejected() {
        let r = make_multipliers(2, &AngleScheme::Explicit(vec![0.5, 0.5]), 50);
        assert_eq!(r, Err(Error::RootOfUnity { component: 0, order: 2 }));
    }

    #[test]
    fn equal_angles_are_an_extra_resonance() {
        let t = 2f64.sqrt();
        let r = make_multipliers(3, &AngleScheme::Explicit(vec![t, t, -2.0 * t]), 10);
        assert!(matches!(r, Err(Error::ExtraResonance { .. })));
    }

    #[test]
    fn normal_form_coefficient() {
        let m = make_multipliers(2, &AngleScheme::Default, 50).unwrap();
        let l1 = m.lambda(0);
        let f = make_normal_form(m, 1);
        let s = f.to_series(5);
        assert_eq!(s.get(&MultiIndex::from_slice(&[2, 1]), 0), -l1 / 2.0);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn test_mode_arithmetic() {
        let f = make_normal_form(Multipliers::unchecked(vec![0.0, 0.0]), 1);
        let z = [Complex64::new(0.1, 0.0); 2];
        let w = f.evaluate(&z);
        // 0.1 * (1 - 0.01 / 2)
        assert!((w[0] - Complex64::new(0.0995, 0.0)).norm() < 1e-16);
        assert!((w[1] - Complex64::new(0.0995, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn tail_order_enforced() {
        let m = make_multipliers(2, &AngleScheme::Default, 50).unwrap();
        let base = make_normal_form(m, 1);
        let mut tail = TruncatedSeriesMap::zero(2, 12);
        tail.add_term(MultiIndex::from_slice(&[2, 1]), 0, Complex64::new(1.0, 0.0));
        assert!(matches!(
            make_perturbed(&base, tail, 6),
            Err(Error::TailTooLow { degree: 3, .. })
        ));
        let mut ok = TruncatedSeriesMap::zero(2, 12);
        ok.add_term(MultiIndex::from_slice(&[3, 3]), 0, Complex64::new(0.01, 0.0));
        assert!(make_perturbed(&base, ok, 6).is_ok());
    }

    #[test]
    fn pointwise_tail_matches_series() {
        let m = make_multipliers(2, &AngleScheme::Default, 50).unwrap();
        let base = make_normal_form(m, 1);
        let mut tail = TruncatedSeriesMap::zero(2, 12);
        tail.add_term(MultiIndex::from_slice(&[3, 3]), 0, Complex64::new(0.01, 0.2));
        tail.add_term(MultiIndex::from_slice(&[0, 7]), 1, Complex64::new(-0.3, 0.0));
        let f = make_perturbed(&base, tail, 6).unwrap();
        let z = [Complex64::new(0.3, -0.1), Complex64::new(0.2, 0.25)];
        let a = f.evaluate(&z);
        let b = crate::series::evaluate_series(&f.to_series(12), &z);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn rotating_frame_matches_direct_iteration() {
        let m = make_multipliers(2, &AngleScheme::Default, 50).unwrap();
        let base = make_normal_form(m.clone(), 1);
        let mut tail = TruncatedSeriesMap::zero(2, 12);
        tail.add_term(MultiIndex::from_slice(&[6, 0]), 0, Complex64::new(0.3, 0.2));
        tail.add_term(MultiIndex::from_slice(&[2, 5]), 1, Complex64::new(-0.3, 0.1));
        let f = make_perturbed(&base, tail, 6).unwrap();
        let mut z = vec![Complex64::new(0.2, -0.1), Complex64::new(0.15, 0.25)];
        let mut w = z.clone();
        let mut tmp = w.clone();
        let mut orbit = f.rotating_orbit(&z);
        for n in 0..600u64 {
            z = f.evaluate(&z);
            f.rotating_step(n, &w, &mut tmp);
            core::mem::swap(&mut w, &mut tmp);
            orbit.advance();
            for j in 0..2 {
                let back = m.lambda_power(j, n as i64 + 1) * w[j];
                assert!((back - z[j]).norm() < 1e-13, "n={n}");
                assert!((orbit.point()[j] - w[j]).norm() < 1e-15, "n={n}");
            }
        }
    }

    #[test]
    fn lambda_power_matches_repeated_product() {
        let m = make_multipliers(2, &AngleScheme::Default, 20).unwrap();
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..1000 {
            p *= m.lambda(0);
        }
        assert!((p - m.lambda_power(0, 1000)).norm() < 1e-12);
        assert!((m.lambda_power(1, -3) - m.lambda(1).powi(-3)).norm() < 1e-14);
    }
}
