use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use oneres_core::basins::{polar_sample, wrap_angle, BasinParams, PolarDataset};

use super::{Check, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num};

/// Sector radius of the picture; below `cos(kθ)` so the disk condition is implied.
pub const ATLAS_R: f64 = 0.5;
pub const ATLAS_K: usize = 2;
pub const ATLAS_POINTS: usize = 2000;

/// Headers `r1..rd` and, for `d = 2`, `s, t, h` (`t1..td, h` otherwise).
pub fn write_polar(data: &PolarDataset, d: usize, dir: &Path) -> Result<[PathBuf; 2], CliError> {
    let modulus = dir.join("modulus.csv");
    let header: Vec<String> = (1..=d).map(|j| format!("r{j}")).collect();
    let mut w = csv_writer(&modulus, &header)?;
    for m in &data.moduli {
        w.write_record(m.iter().map(|x| num(*x)))?;
    }
    w.flush()?;
    let argument = dir.join("argument.csv");
    let mut header: Vec<String> = if d == 2 {
        vec!["s".into(), "t".into()]
    } else {
        (1..=d).map(|j| format!("t{j}")).collect()
    };
    header.push("h".into());
    let mut w = csv_writer(&argument, &header)?;
    for a in &data.arguments {
        let mut row: Vec<String> = a.args.iter().map(|x| num(*x)).collect();
        row.push(a.h.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok([modulus, argument])
}

/// Polar picture of `B_h(R, θ, β)` for the configured `θ, β`.
pub fn atlas_params(cfg: &ExperimentConfig, d: usize, k: usize) -> Result<BasinParams, CliError> {
    BasinParams::new(d, k, 0, ATLAS_R, cfg.basin.theta, cfg.basin.beta).map_err(CliError::core)
}

pub fn atlas(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let p = atlas_params(cfg, 2, ATLAS_K)?;
    let data = polar_sample(&p, ATLAS_POINTS);
    let artifacts = write_polar(&data, 2, dir)?.to_vec();
    let mut dominated = true;
    for m in &data.moduli {
        let u: f64 = m.iter().product();
        dominated &= u < 1.0 && m.iter().all(|&r| r < u.powf(p.beta));
    }
    let mut checks = vec![
        Check::equal("modulus rows", data.moduli.len() as f64, ATLAS_POINTS as f64),
        Check::flag("modulus points in W(beta), |u| < 1", dominated, "r_j < (r1 r2)^beta"),
    ];
    for h in 0..ATLAS_K {
        let center = TAU * h as f64 / ATLAS_K as f64;
        let devs: Vec<f64> = data
            .arguments
            .iter()
            .filter(|a| a.h == h)
            .map(|a| wrap_angle(a.args.iter().sum::<f64>() - center))
            .collect();
        let width = devs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let mean = devs.iter().sum::<f64>() / devs.len().max(1) as f64;
        checks.push(Check::within(format!("ribbon {h}: half-width"), width, 0.0, p.theta));
        checks.push(Check::below(
            format!("ribbon {h}: |mean deviation from 2 pi h/k|"),
            mean.abs(),
            0.05,
        ));
    }
    Ok(Outcome { checks, artifacts })
}
