use std::path::Path;
use std::time::Instant;

use rand::Rng;

use oneres_core::basins::{sample_basin, BasinParams};
use oneres_core::fatou::{cylinder_conjugation, tightened, Direction, FatouCoordinates, FatouOptions, FatouPoint};
use oneres_core::germs::GermSpec;
use oneres_core::Complex64;

use super::{certify, fatou_perturbed, halton_offset, reference_normal, rng, Check, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, point_columns};

/// Window of the second evaluation, so `ψ(z)` and `ψ(F z)` stop at unrelated depths.
const SHIFTED_WINDOW: usize = 80;
/// Points per germ for the `τ` and `σ` equations.
const LINEARIZATION_SAMPLES: usize = 200;
/// Entering points per germ for the cylinder model.
const CYLINDER_POINTS: usize = 40;
const CYLINDER_ATTEMPTS: usize = 4000;
const CYLINDER_STEPS: usize = 20_000;

struct Case {
    name: &'static str,
    germ: GermSpec,
    basins: Vec<BasinParams>,
}

fn cases(cfg: &ExperimentConfig) -> Result<Vec<Case>, CliError> {
    let b = &cfg.basin;
    let mut out = Vec::new();
    for (name, k) in [("normal-k1", 1), ("normal-k2", 2)] {
        let germ = reference_normal(2, k);
        let basins = certify(&germ, b.theta, b.beta, b.samples)?;
        out.push(Case { name, germ, basins });
    }
    let germ = fatou_perturbed();
    let beta = b.beta.max(0.45);
    let basins = certify(&germ, b.theta, beta, b.samples)?
        .iter()
        .map(tightened)
        .collect();
    out.push(Case {
        name: "perturbed",
        germ,
        basins,
    });
    Ok(out)
}

fn coordinates<'a>(cfg: &ExperimentConfig, c: &'a Case, window: usize) -> Result<FatouCoordinates<'a>, CliError> {
    let opts = FatouOptions {
        n_max: cfg.fatou.n_max,
        tol: cfg.tol("fatou_stop"),
        window,
    };
    Ok(FatouCoordinates::new(&c.germ, c.basins.clone())
        .map_err(CliError::core)?
        .with_options(opts))
}

/// Maximum that treats NaN as infinite.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

/// Evaluates at `z` and `F(z)`.
fn pair(
    fc: &FatouCoordinates,
    shifted: &FatouCoordinates,
    z: &[Complex64],
) -> Result<(FatouPoint, FatouPoint), CliError> {
    let a = fc.evaluate(z).map_err(|e| CliError::Runtime(e.into()))?;
    let w = fc.germ().evaluate(z);
    let b = shifted.evaluate(&w).map_err(|e| CliError::Runtime(e.into()))?;
    Ok((a, b))
}

/// Splits `total` samples over the sectors.
fn per_sector(total: usize, k: usize, h: usize) -> usize {
    total / k + usize::from(h < total % k)
}

pub fn abel(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let t = Instant::now();
    let tol = cfg.tol("abel");
    let mut checks = Vec::new();
    let path = dir.join("abel.csv");
    let mut header = vec!["germ".to_string(), "h".to_string()];
    header.extend(point_columns(2));
    header.extend(["psi_re", "psi_im", "depth", "est_error", "residual"].map(String::from));
    let mut w = csv_writer(&path, &header)?;
    for (i, case) in cases(cfg)?.iter().enumerate() {
        let fc = coordinates(cfg, case, cfg.fatou.window)?;
        let shifted = coordinates(cfg, case, SHIFTED_WINDOW.max(2 * cfg.fatou.window))?;
        let mut max_res: f64 = 0.0;
        let k = case.germ.k();
        for p in &case.basins {
            let n = per_sector(cfg.fatou.samples, k, p.h);
            for z in sample_basin(p, n, halton_offset(cfg, 10 + i as u64)) {
                let (a, b) = pair(&fc, &shifted, &z)?;
                let r = (b.psi.value - a.psi.value - 1.0).norm();
                max_res = worst(max_res, r);
                let mut row = vec![case.name.to_string(), p.h.to_string()];
                row.extend(z.iter().flat_map(|c| [num(c.re), num(c.im)]));
                row.extend([
                    num(a.psi.value.re),
                    num(a.psi.value.im),
                    a.psi.depth.to_string(),
                    num(a.psi.est_error),
                    num(r),
                ]);
                w.write_record(&row)?;
            }
        }
        checks.push(Check::below(
            format!("{}: max |psi(F z) - psi(z) - 1|", case.name),
            max_res,
            tol,
        ));
    }
    w.flush()?;
    checks.push(Check::below(
        "runtime (s)",
        t.elapsed().as_secs_f64(),
        cfg.tol("fatou_runtime"),
    ));
    Ok(Outcome {
        checks,
        artifacts: vec![path],
    })
}

/// Residuals of `τ_j∘F = λ_j τ_j` and `σ_j∘F = λ_j σ_j (ψ/(ψ+1))^{1/m}`, `j = 1..d`.
fn linear_residuals(fc: &FatouCoordinates, a: &FatouPoint, b: &FatouPoint) -> (f64, f64) {
    let g = fc.germ();
    let mult = g.multipliers();
    let m = g.m();
    let shrink = (a.psi.value / (a.psi.value + 1.0)).powf(1.0 / m as f64);
    let mut tau: f64 = 0.0;
    let mut sigma: f64 = 0.0;
    for j in 1..g.dim() {
        tau = tau.max((b.tau[j - 1].value - mult.lambda(j) * a.tau[j - 1].value).norm());
        let rhs = mult.lambda(j) * a.sigma(j, m) * shrink;
        sigma = sigma.max((b.sigma(j, m) - rhs).norm());
    }
    let rhs = mult.lambda(0) * fc.sigma_one_of(a) * shrink;
    sigma = sigma.max((fc.sigma_one_of(b) - rhs).norm());
    (tau, sigma)
}

/// Starts with moduli log-uniform in `[0.02, 0.1]` whose orbits enter a basin.
fn entering_points(cfg: &ExperimentConfig, fc: &FatouCoordinates, stream: u64) -> Vec<Vec<Complex64>> {
    let mut r = rng(cfg, stream);
    let d = fc.germ().dim();
    let mut out = Vec::new();
    for _ in 0..CYLINDER_ATTEMPTS {
        if out.len() == CYLINDER_POINTS {
            break;
        }
        let z: Vec<Complex64> = (0..d)
            .map(|_| {
                let m = (0.02f64.ln() + r.gen::<f64>() * 5f64.ln()).exp();
                Complex64::from_polar(m, r.gen::<f64>() * std::f64::consts::TAU)
            })
            .collect();
        if fc.global_coordinate(&z, CYLINDER_STEPS).is_ok() {
            out.push(z);
        }
    }
    out
}

pub fn linearization(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let tol = cfg.tol("linearization");
    let cyl_tol = cfg.tol("cylinder");
    let mut checks = Vec::new();
    let path = dir.join("cylinder.csv");
    let mut header = vec!["germ".to_string()];
    header.extend(point_columns(2));
    header.extend(["entry", "zeta_re", "zeta_im", "zeta_step_error", "xi_rel_error"].map(String::from));
    let mut w = csv_writer(&path, &header)?;
    for (i, case) in cases(cfg)?.iter().enumerate() {
        let fc = coordinates(cfg, case, cfg.fatou.window)?;
        let shifted = coordinates(cfg, case, SHIFTED_WINDOW.max(2 * cfg.fatou.window))?;
        let (mut tau, mut sigma) = (0.0f64, 0.0f64);
        let k = case.germ.k();
        for p in &case.basins {
            let n = per_sector(LINEARIZATION_SAMPLES, k, p.h);
            for z in sample_basin(p, n, halton_offset(cfg, 20 + i as u64)) {
                let (a, b) = pair(&fc, &shifted, &z)?;
                let (t, s) = linear_residuals(&fc, &a, &b);
                tau = worst(tau, t);
                sigma = worst(sigma, s);
            }
        }
        checks.push(Check::below(
            format!("{}: max |tau_j(F z) - lambda_j tau_j(z)|", case.name),
            tau,
            tol,
        ));
        checks.push(Check::below(
            format!("{}: max sigma equation residual", case.name),
            sigma,
            tol,
        ));
        if case.germ.has_tail() {
            continue;
        }
        let mult = case.germ.multipliers();
        let starts = entering_points(cfg, &fc, 30 + i as u64);
        let (mut zeta_err, mut xi_err) = (0.0f64, 0.0f64);
        for z in &starts {
            let runtime = |e: oneres_core::Error| CliError::Runtime(e.into());
            let (p, entry) = fc.global_coordinate(z, CYLINDER_STEPS).map_err(runtime)?;
            let (q, _) = fc
                .global_coordinate(&case.germ.evaluate(z), CYLINDER_STEPS)
                .map_err(runtime)?;
            let a = cylinder_conjugation(&q, mult, Direction::Forward).map_err(runtime)?;
            let b = cylinder_conjugation(&p, mult, Direction::Forward).map_err(runtime)?;
            let ze = (a.zeta - b.zeta - 1.0).norm();
            // `η` scales `ξ_j` by `|λ_j|^{-ζ}`, which under- or overflows for large `Im ζ`;
            // the relative change is taken as the ratio `e^{-(ζ' - ζ) log λ_j} ξ'_j / ξ_j`.
            let xe =
                q.xi.iter()
                    .zip(&p.xi)
                    .enumerate()
                    .map(|(j, (x, y))| ((-(q.zeta - p.zeta) * mult.log_lambda(j + 1)).exp() * x / y - 1.0).norm())
                    .fold(0.0, worst);
            zeta_err = worst(zeta_err, ze);
            xi_err = worst(xi_err, xe);
            let mut row = vec![case.name.to_string()];
            row.extend(z.iter().flat_map(|c| [num(c.re), num(c.im)]));
            row.extend([entry.to_string(), num(p.zeta.re), num(p.zeta.im), num(ze), num(xe)]);
            w.write_record(&row)?;
        }
        checks.push(Check::flag(
            format!("{}: entering points found", case.name),
            !starts.is_empty(),
            format!("at least one of {CYLINDER_ATTEMPTS} starts enters a basin"),
        ));
        checks.push(Check::below(
            format!("{}: max |zeta(F z) - zeta(z) - 1|", case.name),
            zeta_err,
            cyl_tol,
        ));
        checks.push(Check::below(
            format!("{}: max relative xi change", case.name),
            xi_err,
            cyl_tol,
        ));
    }
    w.flush()?;
    Ok(Outcome {
        checks,
        artifacts: vec![path],
    })
}
