//! Fatou coordinates on the local basins.
//!
//! Along an orbit `z_n` with `U_n = u_n^{-k}` and `m = kd`,
//!
//! ```text
//! ψ_n   = U_n - n + c log U_n + e_1/U_n + e_2/U_n² + e_3/U_n³,   c = -(m+1)/(2m)
//! τ_j,n = λ_j^{-n} z_n^j U_n^{1/m}
//! ```
//!
//! converge to `ψ` with `ψ∘F = ψ + 1` and `τ_j = lim λ_j^{-n} z_n^j (ψ + n)^{1/m}` with
//! `τ_j∘F = λ_j τ_j`. The `e_i` are the coefficients of the formal Fatou coordinate of the
//! normal form, so its increments are `O(U^{-5})`; `U_n^{1/m}` replaces `(ψ + n)^{1/m}`
//! since their ratio tends to 1 and `z^j U^{1/m}` is invariant under the normal form.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::basins::{in_basin, in_t, sample_basin, to_t_chart, BasinParams};
use crate::error::{Error, Result};
use crate::germs::{GermSpec, Multipliers};
use crate::series::invert_matrix;

/// Branch bookkeeping: every logarithm and root is principal, taken at arguments with
/// positive real part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    /// Smallest `Re U_n` over the steps used.
    pub min_re: f64,
    /// `arg U_n` at the final step.
    pub final_arg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FatouEvaluation {
    pub value: Complex64,
    pub depth: usize,
    /// Spread of the approximants over the last `window` steps.
    pub est_error: f64,
    pub branch: Branch,
}

/// Approximants are sampled, and the stopping rule tested, every `CHECK_STRIDE` steps.
const CHECK_STRIDE: usize = 4;

/// Settings of the approximation loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FatouOptions {
    pub n_max: usize,
    /// Stop once the spread over the window is below `tol max(1, |value|)`, or at
    /// rounding level.
    pub tol: f64,
    pub window: usize,
}

impl Default for FatouOptions {
    fn default() -> Self {
        Self {
            n_max: 1_000_000,
            tol: 1e-12,
            window: 32,
        }
    }
}

/// `ψ`, `τ_2..τ_d` and the sector of one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FatouPoint {
    pub h: usize,
    pub psi: FatouEvaluation,
    /// `τ_j` for the 0-based coordinates `1..d`.
    pub tau: Vec<FatouEvaluation>,
}

impl FatouPoint {
    fn root(&self, m: usize) -> Complex64 {
        self.psi.value.powf(1.0 / m as f64)
    }

    /// `σ_j = τ_j / ψ^{1/m}` for the 0-based `j >= 1`.
    pub fn sigma(&self, j: usize, m: usize) -> Complex64 {
        self.tau[j - 1].value / self.root(m)
    }
}

/// Coefficients of `ψ(U) = U + c log U + e_1/U + e_2/U² + e_3/U³ + O(U^{-4})`, the formal
/// solution of `ψ(U') = ψ(U) + 1` for `U' = U (1 - 1/(mU))^{-m}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftConstants {
    pub m: usize,
    /// `c = -(m+1)/(2m)`.
    pub c: f64,
    pub e: [f64; 3],
}

impl DriftConstants {
    pub fn new(m: usize) -> Self {
        let m = m as f64;
        let e1 = (m + 1.0) * (2.0 * m + 1.0) / (12.0 * m * m);
        let e2 = (m + 1.0).powi(2) * (3.0 * m + 1.0) / (48.0 * m.powi(3));
        let e3 = (m + 1.0) * (4.0 * m + 1.0) * (19.0 * m * m + 40.0 * m + 19.0) / (2160.0 * m.powi(4));
        Self {
            m: m as usize,
            c: -(m + 1.0) / (2.0 * m),
            e: [e1, e2, e3],
        }
    }

    /// `U + c log U + Σ e_i U^{-i}`.
    pub fn psi_of(&self, big_u: Complex64) -> Complex64 {
        let x = big_u.inv();
        big_u + self.c * big_u.ln() + x * (self.e[0] + x * (self.e[1] + x * self.e[2]))
    }
}

/// Basins tightened for the perturbed case: `R` doubled, `θ` halved, `β` halfway to `1/d`.
pub fn tightened(p: &BasinParams) -> BasinParams {
    BasinParams {
        r: 2.0 * p.r,
        theta: p.theta / 2.0,
        beta: 0.5 * (p.beta + 1.0 / p.d as f64),
        ..*p
    }
}

#[derive(Clone, Debug)]
pub struct FatouCoordinates<'a> {
    germ: &'a GermSpec,
    basins: Vec<BasinParams>,
    consts: DriftConstants,
    pub options: FatouOptions,
}

impl<'a> FatouCoordinates<'a> {
    /// `basins[h]` are the parameters of `B_h`.
    pub fn new(germ: &'a GermSpec, basins: Vec<BasinParams>) -> Result<Self> {
        if basins.len() != germ.k() {
            return Err(Error::DimensionMismatch {
                expected: germ.k(),
                got: basins.len(),
            });
        }
        for b in &basins {
            b.validate()?;
        }
        Ok(Self {
            germ,
            basins,
            consts: DriftConstants::new(germ.m()),
            options: FatouOptions::default(),
        })
    }

    pub fn with_options(mut self, options: FatouOptions) -> Self {
        self.options = options;
        self
    }

    pub fn germ(&self) -> &GermSpec {
        self.germ
    }

    pub fn basins(&self) -> &[BasinParams] {
        &self.basins
    }

    pub fn constants(&self) -> DriftConstants {
        self.consts
    }

    pub fn sector_of(&self, z: &[Complex64]) -> Option<usize> {
        self.basins.iter().position(|p| in_basin(z, p).is_in())
    }

    /// `ψ` and all `τ_j` from a single orbit.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<FatouPoint> {
        let h = self.sector_of(z).ok_or(Error::NotInBasin)?;
        let d = self.germ.dim();
        let k = self.germ.k() as i32;
        let m = self.consts.m as f64;
        let opts = self.options;
        let mut orbit = self.germ.rotating_orbit(z);
        let w_len = opts.window.max(2);
        // Ring of `[ψ_n, τ_n...]` sampled every `CHECK_STRIDE` steps, covering the last
        // `window` steps, flattened.
        let slots = w_len.div_ceil(CHECK_STRIDE) + 1;
        let mut ring = vec![Complex64::new(0.0, 0.0); slots * d];
        let mut cur = vec![Complex64::new(0.0, 0.0); d];
        let mut min_re = f64::INFINITY;
        let mut early_max: f64 = 0.0;
        let mut late_max: f64 = 0.0;
        let mut taken = 0;
        for n in 0..=opts.n_max {
            if n > 0 {
                orbit.advance();
            }
            if n % CHECK_STRIDE != 0 && n != opts.n_max {
                continue;
            }
            let wn = orbit.point();
            let u: Complex64 = wn.iter().product();
            if u.norm() == 0.0 {
                return Err(Error::NotInBasin);
            }
            let big_u = u.powi(-k);
            min_re = min_re.min(big_u.re);
            if big_u.re <= 0.0 {
                return Err(Error::NotInBasin);
            }
            let root = big_u.powf(1.0 / m);
            cur[0] = self.consts.psi_of(big_u) - n as f64;
            for (c, &x) in cur[1..].iter_mut().zip(&wn[1..]) {
                *c = x * root;
            }
            let slot = taken % slots;
            taken += 1;
            ring[slot * d..(slot + 1) * d].copy_from_slice(&cur);
            if taken < slots {
                continue;
            }
            let mut ok = true;
            let mut est: f64 = 0.0;
            for (i, v) in cur.iter().enumerate() {
                let spread = ring
                    .chunks_exact(d)
                    .map(|p| (p[i] - v).norm_sqr())
                    .fold(0.0, f64::max)
                    .sqrt();
                let noise = if i == 0 { big_u.norm() } else { v.norm() };
                let floor = 8.0 * w_len as f64 * f64::EPSILON * noise;
                ok &= spread < (opts.tol * v.norm().max(1.0)).max(floor);
                est = est.max(spread);
            }
            if n >= opts.n_max / 4 && n < opts.n_max / 2 {
                early_max = early_max.max(est);
            }
            if n >= 3 * opts.n_max / 4 {
                late_max = late_max.max(est);
            }
            if ok || n == opts.n_max {
                if !ok && late_max >= early_max {
                    return Err(Error::NoConvergence(n));
                }
                let branch = Branch {
                    min_re,
                    final_arg: big_u.arg(),
                };
                let ev = |value| FatouEvaluation {
                    value,
                    depth: n,
                    est_error: est,
                    branch,
                };
                return Ok(FatouPoint {
                    h,
                    psi: ev(cur[0]),
                    tau: cur[1..].iter().map(|&t| ev(t)).collect(),
                });
            }
        }
        Err(Error::NoConvergence(opts.n_max))
    }

    pub fn psi(&self, z: &[Complex64]) -> Result<FatouEvaluation> {
        Ok(self.evaluate(z)?.psi)
    }

    /// `τ_j` for the 0-based `j` in `1..d`.
    pub fn tau(&self, z: &[Complex64], j: usize) -> Result<FatouEvaluation> {
        self.check_index(j)?;
        Ok(self.evaluate(z)?.tau[j - 1])
    }

    /// `σ_j = ψ^{-1/m} τ_j` for the 0-based `j` in `1..d`.
    pub fn sigma(&self, z: &[Complex64], j: usize) -> Result<FatouEvaluation> {
        self.check_index(j)?;
        let p = self.evaluate(z)?;
        let t = p.tau[j - 1];
        Ok(FatouEvaluation {
            value: p.sigma(j, self.consts.m),
            ..t
        })
    }

    /// `σ_1 = e^{2πih/k} (ψ^{1/k} σ_2⋯σ_d)^{-1}`.
    pub fn sigma_one(&self, z: &[Complex64]) -> Result<FatouEvaluation> {
        let p = self.evaluate(z)?;
        Ok(FatouEvaluation {
            value: self.sigma_one_of(&p),
            ..p.psi
        })
    }

    pub fn sigma_one_of(&self, p: &FatouPoint) -> Complex64 {
        let k = self.germ.k() as f64;
        let m = self.consts.m;
        let prod: Complex64 = (1..self.germ.dim()).map(|j| p.sigma(j, m)).product();
        let zeta = Complex64::from_polar(1.0, 2.0 * PI * p.h as f64 / k);
        zeta / (p.psi.value.powf(1.0 / k) * prod)
    }

    /// `φ = (ψ, σ_2, .., σ_d)`.
    pub fn phi(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.evaluate(z)?;
        let mut out = vec![p.psi.value];
        out.extend((1..self.germ.dim()).map(|j| p.sigma(j, self.consts.m)));
        Ok(out)
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j >= self.germ.dim() {
            return Err(Error::InvalidParameter("coordinate index must be in 1..d"));
        }
        Ok(())
    }

    /// `φ̂(z) = (ψ(F^n z) - n, λ_j^{-n} τ_j(F^n z))` at the first `n <= max_steps` with
    /// `F^n z` in a basin.
    pub fn global_coordinate(&self, z: &[Complex64], max_steps: usize) -> Result<(CylinderPoint, usize)> {
        let mut zn = z.to_vec();
        let mut w = vec![Complex64::new(0.0, 0.0); zn.len()];
        for n in 0..=max_steps {
            if self.sector_of(&zn).is_some() {
                return Ok((self.global_coordinate_at(z, n)?, n));
            }
            self.germ.evaluate_into(&zn, &mut w);
            core::mem::swap(&mut zn, &mut w);
        }
        Err(Error::NeverEntersBasin(max_steps))
    }

    /// `φ̂` through the given depth, which must land in a basin.
    pub fn global_coordinate_at(&self, z: &[Complex64], n: usize) -> Result<CylinderPoint> {
        let mut zn = z.to_vec();
        let mut w = vec![Complex64::new(0.0, 0.0); zn.len()];
        for _ in 0..n {
            self.germ.evaluate_into(&zn, &mut w);
            core::mem::swap(&mut zn, &mut w);
        }
        let p = self.evaluate(&zn)?;
        let mult = self.germ.multipliers();
        Ok(CylinderPoint {
            zeta: p.psi.value - n as f64,
            xi: p
                .tau
                .iter()
                .enumerate()
                .map(|(i, t)| mult.lambda_power(i + 1, -(n as i64)) * t.value)
                .collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderPoint {
    pub zeta: Complex64,
    /// `d - 1` nonzero values.
    pub xi: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// `η(ζ, ξ) = (ζ, e^{-ζ log λ_j} ξ_j)` with principal logarithms; `Backward` inverts it.
pub fn cylinder_conjugation(p: &CylinderPoint, mult: &Multipliers, dir: Direction) -> Result<CylinderPoint> {
    if p.xi.len() + 1 != mult.dim() {
        return Err(Error::DimensionMismatch {
            expected: mult.dim() - 1,
            got: p.xi.len(),
        });
    }
    if p.xi.iter().any(|x| x.norm() == 0.0) {
        return Err(Error::InvalidParameter("xi components must be nonzero"));
    }
    let s = match dir {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    Ok(CylinderPoint {
        zeta: p.zeta,
        xi: p
            .xi
            .iter()
            .enumerate()
            .map(|(i, &x)| (s * p.zeta * mult.log_lambda(i + 1)).exp() * x)
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianSample {
    pub r: f64,
    /// Determinant of `(U, z²..z^d) ↦ (ψ, σ_2..σ_d)` at `(r^{-kd}, r, .., r)`.
    pub det: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentSample {
    /// `(W, w_2..w_d)` in `T`.
    pub target: Vec<Complex64>,
    pub solution: Option<Vec<Complex64>>,
    pub residual: f64,
    pub iterations: usize,
    pub in_basin: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityReport {
    pub points: usize,
    /// Smallest coordinatewise relative distance between images of distinct points.
    pub min_normalized_distance: f64,
    pub jacobians: Vec<JacobianSample>,
    pub containment: Vec<ContainmentSample>,
}

/// Basin point with chart coordinates `(U, z')` on sector `h`.
fn from_t_chart(big_u: Complex64, zp: &[Complex64], k: usize, h: usize) -> Vec<Complex64> {
    let kf = k as f64;
    let u = Complex64::from_polar(
        big_u.norm().powf(-1.0 / kf),
        -big_u.arg() / kf + 2.0 * PI * h as f64 / kf,
    );
    let rest: Complex64 = zp.iter().product();
    let mut z = vec![u / rest];
    z.extend_from_slice(zp);
    z
}

fn phi_in_chart(fc: &FatouCoordinates, x: &[Complex64], h: usize) -> Result<Vec<Complex64>> {
    fc.phi(&from_t_chart(x[0], &x[1..], fc.germ.k(), h))
}

fn chart_jacobian(fc: &FatouCoordinates, x: &[Complex64], h: usize, rel: f64) -> Result<Vec<Vec<Complex64>>> {
    let d = x.len();
    let mut jac = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for col in 0..d {
        let step = rel * x[col].norm();
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[col] += step;
        b[col] -= step;
        let fa = phi_in_chart(fc, &a, h)?;
        let fb = phi_in_chart(fc, &b, h)?;
        for row in 0..d {
            jac[row][col] = (fa[row] - fb[row]) / (2.0 * step);
        }
    }
    Ok(jac)
}

fn det(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let Some(p) = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())) else {
            return Complex64::new(0.0, 0.0);
        };
        if a[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest.iter_mut() {
            let f = row[c] / pivot[c];
            for (x, v) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * v;
            }
        }
    }
    det
}

/// Newton iterations for `φ = target` in the `(U, z')` chart, started at the target.
pub fn solve_phi(
    fc: &FatouCoordinates,
    target: &[Complex64],
    h: usize,
    max_iter: usize,
    tol: f64,
) -> ContainmentSample {
    let mut x = target.to_vec();
    let scale: Vec<f64> = target.iter().map(|t| t.norm()).collect();
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let Ok(fx) = phi_in_chart(fc, &x, h) else {
            break;
        };
        residual = fx
            .iter()
            .zip(target)
            .zip(&scale)
            .map(|((a, b), s)| (a - b).norm() / s)
            .fold(0.0, f64::max);
        if residual < tol {
            let z = from_t_chart(x[0], &x[1..], fc.germ.k(), h);
            let inb = in_basin(&z, &fc.basins[h]).is_in();
            return ContainmentSample {
                target: target.to_vec(),
                solution: Some(z),
                residual,
                iterations: it,
                in_basin: inb,
            };
        }
        let Ok(jac) = chart_jacobian(fc, &x, h, 1e-6) else {
            break;
        };
        let Some(inv) = invert_matrix(&jac) else {
            break;
        };
        for (i, row) in inv.iter().enumerate() {
            let dx: Complex64 = row.iter().zip(&fx).zip(target).map(|((a, f), t)| a * (f - t)).sum();
            x[i] -= dx;
        }
    }
    ContainmentSample {
        target: target.to_vec(),
        solution: None,
        residual,
        iterations: max_iter,
        in_basin: false,
    }
}

/// Pairwise separation of `φ` on `grid` basin samples, Jacobians at `(r, .., r)` for
/// `r ∈ radii`, and Newton containment for targets drawn from `T(target_params)`.
pub fn check_injectivity(
    fc: &FatouCoordinates,
    params: &BasinParams,
    grid: usize,
    radii: &[f64],
    target_params: &BasinParams,
    targets: usize,
) -> Result<InjectivityReport> {
    let pts = sample_basin(params, grid, 0);
    let images: Vec<Vec<Complex64>> = pts.iter().map(|z| fc.phi(z)).collect::<Result<_>>()?;
    let mut min_dist = f64::INFINITY;
    for i in 0..images.len() {
        for j in 0..i {
            let dist = images[i]
                .iter()
                .zip(&images[j])
                .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()))
                .fold(0.0, f64::max);
            min_dist = min_dist.min(dist);
        }
    }
    let d = params.d;
    let k = params.k;
    let h = params.h;
    let mut jacobians = Vec::new();
    for &r in radii {
        let mut z = vec![Complex64::new(r, 0.0); d];
        z[d - 1] *= Complex64::from_polar(1.0, 2.0 * PI * h as f64 / k as f64);
        let (big_u, zp) = to_t_chart(&z, k).ok_or(Error::NotInBasin)?;
        let mut x = vec![big_u];
        x.extend(zp);
        let jac = chart_jacobian(fc, &x, h, 1e-6)?;
        jacobians.push(JacobianSample { r, det: det(&jac) });
    }
    let mut containment = Vec::new();
    for z in sample_basin(target_params, targets, 1) {
        let (big_u, zp) = to_t_chart(&z, k).ok_or(Error::NotInBasin)?;
        debug_assert!(in_t(big_u, &zp, target_params).is_in());
        let mut t = vec![big_u];
        t.extend(zp);
        containment.push(solve_phi(fc, &t, h, 20, 1e-10));
    }
    Ok(InjectivityReport {
        points: pts.len(),
        min_normalized_distance: min_dist,
        jacobians,
        containment,
    })
}
