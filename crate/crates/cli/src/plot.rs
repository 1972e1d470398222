//! Plot datasets: polar decomposition of the basins, orbit traces and limit directions.

use std::path::{Path, PathBuf};

use oneres_core::basins::{polar_sample, wrap_angle};
use oneres_core::orbits::{iterate_orbit_with, OrbitTrace, Retention};
use oneres_core::Complex64;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, parse_point, point_columns};
use crate::suites::atlas::{atlas_params, write_polar, ATLAS_POINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Modulus,
    Argument,
    Orbit,
    Directions,
}

/// Coordinate of the default start `(r, .., r)`.
pub const DEFAULT_START: f64 = 0.05;

/// `orbit.start` or `(r, .., r)`.
pub fn start_point(cfg: &ExperimentConfig, d: usize) -> Result<Vec<Complex64>, CliError> {
    match &cfg.orbit.start {
        Some(s) => parse_point(s, d),
        None => Ok(vec![Complex64::new(DEFAULT_START, 0.0); d]),
    }
}

/// Columns `n, z1_re, z1_im, .., abs_u, arg_u, U_re, U_im`.
pub fn write_trace(path: &Path, trace: &OrbitTrace) -> Result<(), CliError> {
    let mut header = vec!["n".to_string()];
    header.extend(point_columns(trace.dim()));
    header.extend(["abs_u", "arg_u", "U_re", "U_im"].map(String::from));
    let mut w = csv_writer(path, &header)?;
    for i in 0..trace.len() {
        let mut row = vec![trace.step(i).to_string()];
        row.extend(trace.point(i).iter().flat_map(|c| [num(c.re), num(c.im)]));
        let u = trace.u(i);
        let big = trace.big_u(i).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        row.extend([num(u.norm()), num(u.arg()), num(big.re), num(big.im)]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plotdata(cfg: &ExperimentConfig, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let germ = cfg.germ()?;
    let (d, k) = (germ.dim(), germ.k());
    let o = &cfg.orbit;
    match kind {
        PlotKind::Modulus | PlotKind::Argument => {
            let data = polar_sample(&atlas_params(cfg, d, k)?, ATLAS_POINTS);
            let [modulus, argument] = write_polar(&data, d, dir)?;
            let (keep, drop) = match kind {
                PlotKind::Modulus => (modulus, argument),
                _ => (argument, modulus),
            };
            std::fs::remove_file(drop)?;
            Ok(vec![keep])
        }
        PlotKind::Orbit => {
            let z = start_point(cfg, d)?;
            let retention = Retention::Window {
                from: 0,
                to: o.n_max,
                stride: o.stride,
            };
            let trace = iterate_orbit_with(&germ, &z, o.n_max, o.ball, retention);
            let path = dir.join("orbit.csv");
            write_trace(&path, &trace)?;
            Ok(vec![path])
        }
        PlotKind::Directions => {
            let z = start_point(cfg, d)?;
            let retention = Retention::Window {
                from: (o.n_max / 10).max(1),
                to: o.n_max,
                stride: o.stride,
            };
            let trace = iterate_orbit_with(&germ, &z, o.n_max, o.ball, retention);
            let path = dir.join("directions.csv");
            let mut w = csv_writer(&path, &["n", "arg_z2", "arg_sum_deviation"].map(String::from))?;
            for i in 0..trace.len() {
                let p = trace.point(i);
                let u = trace.u(i);
                let h = sector_of(u, k);
                let center = std::f64::consts::TAU * h as f64 / k as f64;
                let dev = wrap_angle(p.iter().map(|c| c.arg()).sum::<f64>() - center);
                w.write_record([trace.step(i).to_string(), num(p[1].arg()), num(dev)])?;
            }
            w.flush()?;
            Ok(vec![path])
        }
    }
}

/// Nearest sector center of `arg u`.
fn sector_of(u: Complex64, k: usize) -> usize {
    let t = u.arg().rem_euclid(std::f64::consts::TAU) * k as f64 / std::f64::consts::TAU;
    (t.round() as usize) % k
}
