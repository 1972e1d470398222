use std::path::{Path, PathBuf};

use serde::Serialize;

use oneres_core::cycles::{basin_permutation_check, make_root_germ, verify_root, PermutationReport, RootReport};
use oneres_core::germs::GermSpec;

use super::{certify, reference_normal, Check, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, write_json, RootDoc};

#[derive(Serialize)]
struct IterateDoc {
    m: usize,
    a_m: [f64; 2],
    b_m: [f64; 2],
    a_closed: [f64; 2],
    b_closed: [f64; 2],
}

#[derive(Serialize)]
struct VerificationDoc {
    degree: usize,
    max_deviation: f64,
    tail_below_degree: f64,
    power_residual: f64,
    product_residual: f64,
    iterates: Vec<IterateDoc>,
}

pub struct CycleRun {
    pub report: RootReport,
    pub permutation: PermutationReport,
    /// `max |μ_j^p/λ_j - 1|` and `|Πμ_j/ζ_p - 1|`.
    pub closure: (f64, f64),
    pub artifacts: Vec<PathBuf>,
}

/// Builds the root germ of order `p`, verifies it and tabulates the basin permutation.
pub fn run_cycle(cfg: &ExperimentConfig, base: &GermSpec, p: usize, dir: &Path) -> Result<CycleRun, CliError> {
    let root = make_root_germ(base, p).map_err(CliError::core)?;
    let report = verify_root(&root, usize::MAX).map_err(|e| CliError::Runtime(e.into()))?;
    let b = &cfg.basin;
    let basins = certify(base, b.theta, b.beta, b.samples)?;
    let c = &cfg.cycle;
    let permutation =
        basin_permutation_check(&root, &basins, c.r, c.samples).map_err(|e| CliError::Runtime(e.into()))?;
    let closure = root.constraint_residuals();
    let pair = |z: oneres_core::Complex64| [z.re, z.im];
    let root_path = dir.join("root.json");
    write_json(&root_path, &RootDoc::new(&root))?;
    let ver_path = dir.join("verification.json");
    write_json(
        &ver_path,
        &VerificationDoc {
            degree: report.degree,
            max_deviation: report.max_deviation,
            tail_below_degree: report.tail_below_degree,
            power_residual: closure.0,
            product_residual: closure.1,
            iterates: report
                .iterates
                .iter()
                .map(|i| IterateDoc {
                    m: i.m,
                    a_m: pair(i.a_m),
                    b_m: pair(i.b_m),
                    a_closed: pair(i.a_closed),
                    b_closed: pair(i.b_closed),
                })
                .collect(),
        },
    )?;
    let perm_path = dir.join("permutation.csv");
    let mut w = csv_writer(
        &perm_path,
        &["h", "target", "expected", "samples", "success"].map(String::from),
    )?;
    let k = base.k();
    for h in 0..k {
        w.write_record([
            h.to_string(),
            permutation.targets[h].map(|t| t.to_string()).unwrap_or_default(),
            ((h + permutation.shift) % k).to_string(),
            permutation.samples[h].to_string(),
            num(permutation.success[h]),
        ])?;
    }
    w.flush()?;
    Ok(CycleRun {
        report,
        permutation,
        closure,
        artifacts: vec![root_path, ver_path, perm_path],
    })
}

pub fn cycles(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let base = reference_normal(2, 2);
    let run = run_cycle(cfg, &base, 2, dir)?;
    let rep = &run.report;
    let perm = &run.permutation;
    let shifted = perm.targets == [Some(1), Some(0)];
    let checks = vec![
        Check::below(
            format!("max |F_2^2 - F_0| through degree {}", rep.degree),
            rep.max_deviation,
            cfg.tol("root"),
        ),
        Check::equal("verification degree", rep.degree as f64, 11.0),
        Check::below("max |mu_j^2 / lambda_j - 1|", run.closure.0, cfg.tol("closure")),
        Check::below("|mu_1 mu_2 / zeta_2 - 1|", run.closure.1, cfg.tol("closure")),
        Check::flag(
            "permutation h -> h+1 mod 2",
            shifted,
            format!("targets {:?}", perm.targets),
        ),
        Check::equal("minimal success rate", perm.min_success(), 1.0),
        Check::flag(
            "samples per basin",
            perm.samples.iter().all(|&n| n == cfg.cycle.samples),
            format!("{:?} of {}", perm.samples, cfg.cycle.samples),
        ),
    ];
    Ok(Outcome {
        checks,
        artifacts: run.artifacts,
    })
}
