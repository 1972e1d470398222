//! Orbits `z_n = F^n(z)`, their asymptotics, the stable-orbit trichotomy and the
//! accumulation of directions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::basins::{in_basin, unit_turn, wrap_angle, BasinParams};
use crate::error::{Error, Result};
use crate::germs::GermSpec;
use crate::series::invert_matrix;

/// A self-map of `C^dim` whose first `resonant_dim` coordinates carry the resonance.
pub trait OrbitMap {
    fn dim(&self) -> usize;
    fn resonant_dim(&self) -> usize;
    fn order(&self) -> usize;
    /// Coordinate hyperplanes are invariant exactly.
    fn preserves_hyperplanes(&self) -> bool;
    fn step(&self, z: &[Complex64], out: &mut [Complex64]);
}

impl OrbitMap for GermSpec {
    fn dim(&self) -> usize {
        GermSpec::dim(self)
    }

    fn resonant_dim(&self) -> usize {
        GermSpec::dim(self)
    }

    fn order(&self) -> usize {
        self.k()
    }

    fn preserves_hyperplanes(&self) -> bool {
        !self.has_tail()
    }

    fn step(&self, z: &[Complex64], out: &mut [Complex64]) {
        self.evaluate_into(z, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Retention {
    All,
    /// `n ∈ {⌊ratio^m⌋}` plus the final step.
    Logarithmic(f64),
    /// Every `stride`-th step in `from..=to`.
    Window {
        from: u64,
        to: u64,
        stride: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    dim: usize,
    resonant_dim: usize,
    k: usize,
    steps: Vec<u64>,
    points: Vec<Complex64>,
    /// Last computed step.
    pub n_last: u64,
    pub left_ball: bool,
    /// A coordinate below [`HYPERPLANE_THRESHOLD`] at the last step.
    pub hit_hyperplane: Option<usize>,
}

/// Coordinates below this are treated as exactly zero.
pub const HYPERPLANE_THRESHOLD: f64 = 1e-14;

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn step(&self, i: usize) -> u64 {
        self.steps[i]
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_point(&self) -> &[Complex64] {
        self.point(self.len() - 1)
    }

    /// `u_n = z¹⋯z^d` over the resonant coordinates.
    pub fn u(&self, i: usize) -> Complex64 {
        self.point(i)[..self.resonant_dim].iter().product()
    }

    /// `U_n = u_n^{-k}`; `None` when `u_n = 0`.
    pub fn big_u(&self, i: usize) -> Option<Complex64> {
        let u = self.u(i);
        (u.norm() > 0.0).then(|| u.powi(-(self.k as i32)))
    }

    /// Index of the retained step closest to `n` from below.
    pub fn index_at_or_before(&self, n: u64) -> Option<usize> {
        match self.steps.binary_search(&n) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }
}

fn norm2(z: &[Complex64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
}

/// Iterates until `n_max` or until `‖z_n‖₂ > ball`, keeping every step.
pub fn iterate_orbit<M: OrbitMap + ?Sized>(map: &M, z0: &[Complex64], n_max: u64, ball: f64) -> OrbitTrace {
    iterate_orbit_with(map, z0, n_max, ball, Retention::All)
}

pub fn iterate_orbit_with<M: OrbitMap + ?Sized>(
    map: &M,
    z0: &[Complex64],
    n_max: u64,
    ball: f64,
    retention: Retention,
) -> OrbitTrace {
    let dim = map.dim();
    let mut trace = OrbitTrace {
        dim,
        resonant_dim: map.resonant_dim(),
        k: map.order(),
        steps: Vec::new(),
        points: Vec::new(),
        n_last: 0,
        left_ball: false,
        hit_hyperplane: None,
    };
    let mut z = z0.to_vec();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut next_log = 1.0f64;
    let keep = |n: u64, next_log: &mut f64| -> bool {
        match retention {
            Retention::All => true,
            Retention::Logarithmic(ratio) => {
                if n == 0 {
                    return true;
                }
                if (n as f64) >= *next_log {
                    while *next_log <= n as f64 {
                        *next_log = (*next_log * ratio).max(*next_log + 1.0).floor();
                    }
                    true
                } else {
                    false
                }
            }
            Retention::Window { from, to, stride } => n >= from && n <= to && (n - from).is_multiple_of(stride.max(1)),
        }
    };
    let mut stored_last = false;
    for n in 0..=n_max {
        if n > 0 {
            map.step(&z, &mut w);
            core::mem::swap(&mut z, &mut w);
        }
        trace.n_last = n;
        stored_last = keep(n, &mut next_log);
        if stored_last {
            trace.steps.push(n);
            trace.points.extend_from_slice(&z);
        }
        if norm2(&z) > ball {
            trace.left_ball = true;
            break;
        }
    }
    if !stored_last && !matches!(retention, Retention::Window { .. }) {
        trace.steps.push(trace.n_last);
        trace.points.extend_from_slice(&z);
    }
    trace.hit_hyperplane = z.iter().position(|w| w.norm() < HYPERPLANE_THRESHOLD);
    trace
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticsReport {
    pub h: usize,
    /// `|n^{1/k} u_n - e^{2πih/k}|` at the last retained step.
    pub final_error: f64,
    /// Supremum of the same quantity over the window.
    pub sup_error: f64,
    /// Per coordinate, min and max of `|z_n^j| n^{1/(kd)}` over the window.
    pub ratio_min: Vec<f64>,
    pub ratio_max: Vec<f64>,
    pub n_final: u64,
}

fn sector_of(u: Complex64, k: usize) -> usize {
    let t = unit_turn(u.arg()) * k as f64 / (2.0 * PI);
    (t.round() as usize) % k
}

/// Window `[n1, n_last]`.
pub fn check_asymptotics(trace: &OrbitTrace, h: usize, n1: u64) -> Result<AsymptoticsReport> {
    let k = trace.k;
    let i_last = trace.len().checked_sub(1).ok_or(Error::NotInBasin)?;
    let u_last = trace.u(i_last);
    if trace.left_ball || u_last.norm() == 0.0 || sector_of(u_last, k) != h {
        return Err(Error::NotInBasin);
    }
    let zeta = Complex64::from_polar(1.0, 2.0 * PI * h as f64 / k as f64);
    let d = trace.resonant_dim;
    let mut sup: f64 = 0.0;
    let mut rmin = vec![f64::INFINITY; d];
    let mut rmax = vec![0.0f64; d];
    let mut any = false;
    for i in 0..trace.len() {
        let n = trace.step(i);
        if n < n1 || n == 0 {
            continue;
        }
        any = true;
        let nf = n as f64;
        sup = sup.max((trace.u(i) * nf.powf(1.0 / k as f64) - zeta).norm());
        let s = nf.powf(1.0 / (k * d) as f64);
        for (j, zj) in trace.point(i)[..d].iter().enumerate() {
            let r = zj.norm() * s;
            rmin[j] = rmin[j].min(r);
            rmax[j] = rmax[j].max(r);
        }
    }
    if !any {
        return Err(Error::WindowOutOfRange);
    }
    let n = trace.step(i_last) as f64;
    Ok(AsymptoticsReport {
        h,
        final_error: (u_last * n.powf(1.0 / k as f64) - zeta).norm(),
        sup_error: sup,
        ratio_min: rmin,
        ratio_max: rmax,
        n_final: trace.step(i_last),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Basin(usize),
    /// 0-based coordinate that vanishes.
    SiegelHyperplane(usize),
    Escaped,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitVerdict {
    pub verdict: Verdict,
    /// First checked step found in a basin.
    pub first_entry: Option<u64>,
    /// Checked steps after entry that fell outside the basin.
    pub exits_after_entry: usize,
    pub steps: u64,
    pub final_norm: f64,
    pub min_coordinate: f64,
}

/// Basin membership is tested every this many steps.
pub const CHECK_INTERVAL: u64 = 16;

/// `basins[h]` holds the certified parameters of `B_h`.
pub fn classify_stable_orbit<M: OrbitMap + ?Sized>(
    map: &M,
    z0: &[Complex64],
    ball: f64,
    n_max: u64,
    basins: &[BasinParams],
) -> OrbitVerdict {
    let dim = map.dim();
    let rd = map.resonant_dim();
    let mut z = z0.to_vec();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut entry: Option<(u64, usize)> = None;
    let mut exits = 0;
    let min_coord = |z: &[Complex64]| z[..rd].iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
    let verdict = |v, steps, z: &[Complex64], entry: Option<(u64, usize)>, exits| OrbitVerdict {
        verdict: v,
        first_entry: entry.map(|e| e.0),
        exits_after_entry: exits,
        steps,
        final_norm: norm2(z),
        min_coordinate: min_coord(z),
    };
    if norm2(&z) > ball {
        return verdict(Verdict::Escaped, 0, &z, None, 0);
    }
    if map.preserves_hyperplanes() {
        if let Some(j) = z[..rd].iter().position(|c| c.norm() == 0.0) {
            return verdict(Verdict::SiegelHyperplane(j), 0, &z, None, 0);
        }
    }
    for n in 1..=n_max {
        map.step(&z, &mut w);
        core::mem::swap(&mut z, &mut w);
        if norm2(&z) > ball {
            return verdict(Verdict::Escaped, n, &z, entry, exits);
        }
        if n % CHECK_INTERVAL == 0 || n == n_max {
            match entry {
                None => {
                    if let Some(h) = basins.iter().position(|p| in_basin(&z[..rd], p).is_in()) {
                        entry = Some((n, h));
                    }
                }
                Some((_, h)) => {
                    if !in_basin(&z[..rd], &basins[h]).is_in() {
                        exits += 1;
                    }
                }
            }
        }
    }
    let v = match entry {
        Some((_, h)) if exits == 0 => Verdict::Basin(h),
        Some(_) => Verdict::Undecided,
        None => match z[..rd].iter().position(|c| c.norm() < HYPERPLANE_THRESHOLD) {
            Some(j) => Verdict::SiegelHyperplane(j),
            None => Verdict::Undecided,
        },
    };
    verdict(v, n_max, &z, entry, exits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionReport {
    pub h: usize,
    /// `|z_n^j| / ‖z_n‖₂` at the last retained step.
    pub limit_direction: Vec<f64>,
    /// `arg z¹ + ⋯ + arg z^d - 2πh/k`, reduced to `(-π, π]`, at the last retained step.
    pub arg_sum_deviation: f64,
    /// Largest circular gap of `arg z_n^j` over the window, maximized over `j >= 2`.
    pub max_gap: f64,
    /// `|z_n^j| / |z_n^1|` at the last retained step.
    pub modulus_ratio: Vec<f64>,
    /// Smallest Frobenius condition number of a `d × d` matrix of sampled directions.
    pub condition_number: f64,
    pub points_used: usize,
}

/// Largest gap between consecutive angles on the circle.
pub fn max_circular_gap(angles: &mut [f64]) -> f64 {
    if angles.is_empty() {
        return 2.0 * PI;
    }
    for a in angles.iter_mut() {
        *a = unit_turn(*a);
    }
    angles.sort_by(|a, b| a.total_cmp(b));
    let mut gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

fn frobenius_condition(cols: &[&[Complex64]]) -> f64 {
    let d = cols.len();
    let m: Vec<Vec<Complex64>> = (0..d).map(|i| cols.iter().map(|c| c[i] / norm2(c)).collect()).collect();
    let Some(inv) = invert_matrix(&m) else {
        return f64::INFINITY;
    };
    let f = |a: &Vec<Vec<Complex64>>| a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    f(&m) * f(&inv)
}

/// Candidate tuples tried for the condition number.
pub const DIRECTION_TUPLES: usize = 64;

/// Uses the retained steps in `[n_lo, n_hi]`.
pub fn direction_accumulation(trace: &OrbitTrace, h: usize, n_lo: u64, n_hi: u64) -> Result<DirectionReport> {
    let i_last = trace.len().checked_sub(1).ok_or(Error::NotInBasin)?;
    let u_last = trace.u(i_last);
    if trace.left_ball || u_last.norm() == 0.0 || sector_of(u_last, trace.k) != h {
        return Err(Error::NotInBasin);
    }
    let idx: Vec<usize> = (0..trace.len())
        .filter(|&i| (n_lo..=n_hi).contains(&trace.step(i)))
        .collect();
    if idx.len() < trace.dim {
        return Err(Error::WindowOutOfRange);
    }
    let d = trace.dim;
    let last = trace.point(*idx.last().unwrap());
    let nz = norm2(last);
    let center = 2.0 * PI * h as f64 / trace.k as f64;
    let arg_sum: f64 = last[..trace.resonant_dim].iter().map(|c| c.arg()).sum();
    let mut max_gap: f64 = 0.0;
    for j in 1..trace.resonant_dim {
        let mut a: Vec<f64> = idx.iter().map(|&i| trace.point(i)[j].arg()).collect();
        max_gap = max_gap.max(max_circular_gap(&mut a));
    }
    let mut cond = f64::INFINITY;
    let span = idx.len() / d;
    for t in 0..DIRECTION_TUPLES.min(span.max(1)) {
        let stride = (span / DIRECTION_TUPLES.min(span.max(1))).max(1);
        let cols: Vec<&[Complex64]> = (0..d)
            .map(|s| trace.point(idx[(s * span + t * stride).min(idx.len() - 1)]))
            .collect();
        cond = cond.min(frobenius_condition(&cols));
    }
    Ok(DirectionReport {
        h,
        limit_direction: last.iter().map(|c| c.norm() / nz).collect(),
        arg_sum_deviation: wrap_angle(arg_sum - center),
        max_gap,
        modulus_ratio: last.iter().map(|c| c.norm() / last[0].norm()).collect(),
        condition_number: cond,
        points_used: idx.len(),
    })
}

/// Least-squares fit of `Re U_n - n = a + b log|U_n| + e Re(1/U_n)` over `n >= n_lo`;
/// returns `c = -b`.
pub fn fit_drift_constant(trace: &OrbitTrace, n_lo: u64) -> Result<f64> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    let mut count = 0;
    for i in 0..trace.len() {
        let n = trace.step(i);
        if n < n_lo {
            continue;
        }
        let Some(big_u) = trace.big_u(i) else {
            continue;
        };
        let row = [1.0, big_u.norm().ln(), big_u.inv().re];
        let y = big_u.re - n as f64;
        for a in 0..3 {
            aty[a] += row[a] * y;
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
        }
        count += 1;
    }
    if count < 3 {
        return Err(Error::WindowOutOfRange);
    }
    let m: Vec<Vec<Complex64>> = ata
        .iter()
        .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .collect();
    let inv = invert_matrix(&m).ok_or(Error::NoConvergence(count))?;
    let b: f64 = (0..3).map(|j| inv[1][j].re * aty[j]).sum();
    Ok(-b)
}
