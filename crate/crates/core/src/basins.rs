//! Sectors `S_h(R, θ)`, domination regions `W(β)`, local basins `B_h = W(β) ∩ π⁻¹(S_h)`
//! and their image `T(R, θ, β)` in the `(U, z')` chart.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::germs::GermSpec;
use crate::sampling::Halton;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasinParams {
    pub d: usize,
    pub k: usize,
    pub h: usize,
    pub r: f64,
    pub theta: f64,
    pub beta: f64,
}

impl BasinParams {
    pub fn new(d: usize, k: usize, h: usize, r: f64, theta: f64, beta: f64) -> Result<Self> {
        let p = Self {
            d,
            k,
            h,
            r,
            theta,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidDimension(self.d));
        }
        if self.k == 0 || self.h >= self.k {
            return Err(Error::InvalidParameter("need k >= 1 and h < k"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter("R must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < PI / (2.0 * self.k as f64)) {
            return Err(Error::InvalidParameter("theta must lie in (0, pi/(2k))"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0 / self.d as f64) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1/d)"));
        }
        Ok(())
    }

    /// Same parameters on another sector.
    pub fn with_sector(&self, h: usize) -> Self {
        Self { h, ..*self }
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    /// Center `2πh/k` of the sector.
    pub fn center(&self) -> f64 {
        2.0 * PI * self.h as f64 / self.k as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorCheck {
    /// `u = 0`.
    ZeroProduct,
    /// `|u^k - 1/(2R)| < 1/(2R)`, equivalently `Re U > R`.
    Disk,
    Argument,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutReason {
    Sector(SectorCheck),
    /// Lower bound `|U|^{(β-1)/k} < |z²⋯z^d|` of the `(U, z')` chart.
    Product,
    /// `|z^j| < |u|^β` fails for this (0-based) coordinate.
    Domination(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    In,
    Out(OutReason),
}

impl Membership {
    pub fn is_in(self) -> bool {
        self == Membership::In
    }
}

/// `x` reduced to `[0, 2π)`.
pub fn unit_turn(x: f64) -> f64 {
    let t = x % (2.0 * PI);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// `x` reduced to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let t = unit_turn(x);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

pub fn in_sector(u: Complex64, p: &BasinParams) -> Membership {
    if u == Complex64::new(0.0, 0.0) {
        return Membership::Out(OutReason::Sector(SectorCheck::ZeroProduct));
    }
    // `|u^k - 1/(2R)| < 1/(2R)` in the form `Re u^{-k} > R`, exact for tiny `u`.
    let big_u = u.inv().powu(p.k as u32);
    if big_u.re.is_nan() || big_u.re <= p.r {
        return Membership::Out(OutReason::Sector(SectorCheck::Disk));
    }
    if wrap_angle(u.arg() - p.center()).abs() >= p.theta {
        return Membership::Out(OutReason::Sector(SectorCheck::Argument));
    }
    Membership::In
}

pub fn in_basin(z: &[Complex64], p: &BasinParams) -> Membership {
    let u: Complex64 = z.iter().product();
    let s = in_sector(u, p);
    if s != Membership::In {
        return s;
    }
    let bound = u.norm().powf(p.beta);
    match z.iter().position(|zj| zj.norm() >= bound) {
        Some(j) => Membership::Out(OutReason::Domination(j)),
        None => Membership::In,
    }
}

/// Membership of `(U, z²..z^d)` in `T(R, θ, β)`.
pub fn in_t(big_u: Complex64, zp: &[Complex64], p: &BasinParams) -> Membership {
    let k = p.k as f64;
    if big_u.re <= p.r {
        return Membership::Out(OutReason::Sector(SectorCheck::Disk));
    }
    if big_u.arg().abs() >= k * p.theta {
        return Membership::Out(OutReason::Sector(SectorCheck::Argument));
    }
    let m = big_u.norm();
    let prod: f64 = zp.iter().map(|z| z.norm()).product();
    if m.powf((p.beta - 1.0) / k) >= prod {
        return Membership::Out(OutReason::Product);
    }
    let upper = m.powf(-p.beta / k);
    match zp.iter().position(|zj| zj.norm() >= upper) {
        Some(j) => Membership::Out(OutReason::Domination(j + 1)),
        None => Membership::In,
    }
}

/// The chart `z ↦ (u^{-k}, z²..z^d)`; `None` at `u = 0`.
pub fn to_t_chart(z: &[Complex64], k: usize) -> Option<(Complex64, Vec<Complex64>)> {
    let u: Complex64 = z.iter().product();
    if u.norm() == 0.0 {
        return None;
    }
    Some((u.powi(-(k as i32)), z[1..].to_vec()))
}

/// Admissible moduli `(lower, upper)` for `z^j`, `j = prefix.len() + 2`, given `u` and `z²..z^{j-1}`.
pub fn annulus_bounds(u: Complex64, prefix: &[Complex64], p: &BasinParams) -> Result<(f64, f64)> {
    let a = u.norm();
    if a == 0.0 {
        return Err(Error::InvalidParameter("u must be nonzero"));
    }
    let j = prefix.len() + 2;
    if j > p.d {
        return Err(Error::DimensionMismatch {
            expected: p.d - 2,
            got: prefix.len(),
        });
    }
    let pr: f64 = prefix.iter().map(|z| z.norm()).product();
    let lower = a.powf(1.0 - (p.d - j + 1) as f64 * p.beta) / pr;
    let upper = a.powf(p.beta);
    if lower >= upper {
        return Err(Error::EmptyAnnulus);
    }
    Ok((lower, upper))
}

fn log_uniform(lo: f64, hi: f64, t: f64) -> f64 {
    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
}

/// Ratio `max Re U / R` covered by [`sample_basin`].
pub const SAMPLE_DEPTH: f64 = 1e4;

/// Quasi-random points of `B_h(R, θ, β)`: `log Re U` and `Im U / Re U` uniform,
/// `z²..z^d` log-uniform in their annuli with uniform arguments, `z¹` closing the product.
pub fn sample_basin(p: &BasinParams, n: usize, offset: u64) -> Vec<Vec<Complex64>> {
    let d = p.d;
    let k = p.k as f64;
    let tan = (k * p.theta).tan();
    let mut seq = Halton::with_offset(2 * d, offset);
    let mut out = Vec::with_capacity(n);
    let mut budget = 100 * n + 100;
    while out.len() < n && budget > 0 {
        budget -= 1;
        let x = seq.next_point();
        let re = p.r * SAMPLE_DEPTH.powf(x[0]);
        let big_u = Complex64::new(re, re * tan * (2.0 * x[1] - 1.0));
        let u = Complex64::from_polar(big_u.norm().powf(-1.0 / k), -big_u.arg() / k + p.center());
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        let mut ok = true;
        for j in 1..d {
            match annulus_bounds(u, &z[1..j], p) {
                Ok((lo, hi)) => {
                    let r = log_uniform(lo, hi, x[2 * j]);
                    z[j] = Complex64::from_polar(r, 2.0 * PI * x[2 * j + 1]);
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let rest: Complex64 = z[1..].iter().product();
        z[0] = u / rest;
        if in_basin(&z, p).is_in() {
            out.push(z);
        }
    }
    out
}

/// Worst sampled slack of each basin inequality after one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margins {
    /// `min Re U' / R - 1`.
    pub sector: f64,
    /// `min kθ - |arg U'|`.
    pub argument: f64,
    /// `min_j log(|u'|^β / |z'^j|)`.
    pub domination: f64,
    /// `max |U' - U - 1|`.
    pub drift: f64,
}

impl Margins {
    fn new() -> Self {
        Self {
            sector: f64::INFINITY,
            argument: f64::INFINITY,
            domination: f64::INFINITY,
            drift: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct R0Trial {
    pub r: f64,
    pub failures: usize,
    /// Margins per sector.
    pub margins: Vec<Margins>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct R0Certificate {
    pub r0: f64,
    pub theta: f64,
    pub beta: f64,
    pub samples: usize,
    pub trials: Vec<R0Trial>,
}

impl R0Certificate {
    pub fn params(&self, germ: &GermSpec, h: usize) -> BasinParams {
        BasinParams {
            d: germ.dim(),
            k: germ.k(),
            h,
            r: self.r0,
            theta: self.theta,
            beta: self.beta,
        }
    }
}

pub const R0_LIMIT: f64 = 1e12;

/// Runs the invariance test on one `R`, accumulating margins.
pub fn test_invariance(germ: &GermSpec, p: &BasinParams, samples: usize) -> (usize, Margins) {
    let k = p.k as i32;
    let mut m = Margins::new();
    let mut fails = 0;
    let mut w = vec![Complex64::new(0.0, 0.0); p.d];
    for z in sample_basin(p, samples, 0) {
        germ.evaluate_into(&z, &mut w);
        let u0: Complex64 = z.iter().product();
        let u1: Complex64 = w.iter().product();
        let (big0, big1) = (u0.powi(-k), u1.powi(-k));
        let drift = (big1 - big0 - 1.0).norm();
        let ok = in_basin(&w, p).is_in() && drift < 0.5;
        if !ok {
            fails += 1;
        }
        m.drift = m.drift.max(drift);
        if u1.norm() > 0.0 {
            m.sector = m.sector.min(big1.re / p.r - 1.0);
            m.argument = m.argument.min(p.k as f64 * p.theta - big1.arg().abs());
            let lb = p.beta * u1.norm().ln();
            for wj in &w {
                m.domination = m.domination.min(lb - wj.norm().ln());
            }
        }
    }
    (fails, m)
}

/// Smallest `R = 2^i <= 10^12` for which `samples` points of every `B_h` stay in `B_h`
/// with `|U(F(z)) - U(z) - 1| < 1/2`.
pub fn find_r0(germ: &GermSpec, theta: f64, beta: f64, samples: usize) -> Result<R0Certificate> {
    let d = germ.dim();
    let k = germ.k();
    let base = BasinParams::new(d, k, 0, 1.0, theta, beta)?;
    if germ.has_tail() && beta * (germ.l() + d - 1) as f64 <= (2 * k + 1) as f64 {
        return Err(Error::InvalidParameter("need beta (l + d - 1) > 2k + 1"));
    }
    let mut trials = Vec::new();
    let mut r = 1.0;
    while r <= R0_LIMIT {
        let mut failures = 0;
        let mut margins = Vec::with_capacity(k);
        for h in 0..k {
            let (f, m) = test_invariance(germ, &base.with_sector(h).with_r(r), samples);
            failures += f;
            margins.push(m);
        }
        trials.push(R0Trial { r, failures, margins });
        if failures == 0 {
            return Ok(R0Certificate {
                r0: r,
                theta,
                beta,
                samples,
                trials,
            });
        }
        r *= 2.0;
    }
    Err(Error::SearchExhausted(R0_LIMIT))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArgumentPoint {
    /// `arg z^1..arg z^d` in `[0, 2π)`.
    pub args: Vec<f64>,
    pub h: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolarDataset {
    /// `(|z^1|, .., |z^d|)`.
    pub moduli: Vec<Vec<f64>>,
    pub arguments: Vec<ArgumentPoint>,
}

/// Smallest `|u|` used by [`polar_sample`].
pub const POLAR_MIN_U: f64 = 1e-4;

/// Modulus and argument components of the basins with `|u| < 1`, the picture in which
/// the sector disk condition follows from the argument condition once `R < cos(kθ)`.
pub fn polar_sample(p: &BasinParams, n: usize) -> PolarDataset {
    let d = p.d;
    let mut out = PolarDataset::default();
    let mut seq = Halton::new(d);
    while out.moduli.len() < n {
        let x = seq.next_point();
        let a = log_uniform(POLAR_MIN_U, 1.0, x[0]);
        let u = Complex64::new(a, 0.0);
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        let mut ok = true;
        for j in 1..d {
            match annulus_bounds(u, &z[1..j], p) {
                Ok((lo, hi)) => z[j] = Complex64::new(log_uniform(lo, hi, x[j]), 0.0),
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let rest: f64 = z[1..].iter().map(|w| w.re).product();
        z[0] = Complex64::new(a / rest, 0.0);
        out.moduli.push(z.iter().map(|w| w.re).collect());
    }
    let mut seq = Halton::new(d);
    for h in 0..p.k {
        let center = p.with_sector(h).center();
        for _ in 0..n {
            let x = seq.next_point();
            let mut args: Vec<f64> = x[..d - 1].iter().map(|t| 2.0 * PI * t).collect();
            let s: f64 = args.iter().sum();
            let last = center - s + p.theta * (2.0 * x[d - 1] - 1.0);
            args.push(unit_turn(last));
            out.arguments.push(ArgumentPoint { args, h });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p() -> BasinParams {
        BasinParams::new(2, 1, 0, 100.0, 0.3, 0.4).unwrap()
    }

    #[test]
    fn reference_point_is_in() {
        assert_eq!(in_basin(&[c(0.05, 0.0), c(0.05, 0.0)], &p()), Membership::In);
    }

    #[test]
    fn opposite_sign_is_out_of_sector() {
        assert!(matches!(
            in_basin(&[c(0.05, 0.0), c(-0.05, 0.0)], &p()),
            Membership::Out(OutReason::Sector(_))
        ));
        assert_eq!(
            in_basin(&[c(0.0, 0.0), c(0.05, 0.0)], &p()),
            Membership::Out(OutReason::Sector(SectorCheck::ZeroProduct))
        );
    }

    #[test]
    fn t_chart_reference() {
        assert_eq!(in_t(c(400.0, 0.0), &[c(0.05, 0.0)], &p()), Membership::In);
        assert_eq!(
            in_t(c(200.0, 0.0), &[c(1e-9, 0.0)], &p()),
            Membership::Out(OutReason::Product)
        );
    }

    #[test]
    fn annulus_reference() {
        let (lo, hi) = annulus_bounds(c(0.0025, 0.0), &[], &p()).unwrap();
        assert!((lo - 0.0025f64.powf(0.6)).abs() < 1e-15);
        assert!((hi - 0.0025f64.powf(0.4)).abs() < 1e-15);
    }

    #[test]
    fn theta_range_enforced() {
        assert!(BasinParams::new(2, 1, 0, 1.0, PI / 2.0, 0.4).is_err());
        assert!(BasinParams::new(2, 1, 0, 1.0, 0.3, 0.5).is_err());
    }
}
