use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use oneres_core::basins::{find_r0, in_basin, sample_basin, BasinParams, R0Certificate};
use oneres_core::fatou::tightened;
use oneres_core::germs::GermSpec;
use oneres_core::orbits::{
    check_asymptotics, classify_stable_orbit, direction_accumulation, iterate_orbit_with, Retention, Verdict,
};
use oneres_core::Complex64;

use super::{fatou_perturbed, halton_offset, reference_normal, rng, Check, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, write_json};

/// Escape radius of the asymptotics runs, above every start.
const ASYMPTOTICS_BALL: f64 = 1.0;
/// Start of the window of the modulus ratios.
const RATIO_FROM: u64 = 1000;
/// Maximal deviation of `arg z¹ + arg z²` from the sector center at the starts.
const START_SPREAD: f64 = 0.3;
/// Basins of the trichotomy run.
const TRICHOTOMY_THETA: f64 = 1.5;
const TRICHOTOMY_BETA: f64 = 0.05;
/// Basin orbits examined for limit directions.
const DIRECTION_ORBITS: usize = 5;
/// Window of the direction check, `[n_max / 10, 10 n_max]`.
const DIRECTION_FROM: f64 = 0.1;
const DIRECTION_SPAN: u64 = 10;

/// Start moduli per `k`.
fn modulus_range(k: usize) -> (f64, f64) {
    if k == 1 {
        (0.04, 0.07)
    } else {
        (0.2, 0.3)
    }
}

pub fn asymptotics(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let t = Instant::now();
    let o = &cfg.orbit;
    let mut checks = Vec::new();
    let path = dir.join("asymptotics.csv");
    let header = [
        "k",
        "h",
        "start",
        "n_final",
        "final_error",
        "sup_error",
        "ratio_min_1",
        "ratio_max_1",
        "ratio_min_2",
        "ratio_max_2",
    ]
    .map(String::from);
    let mut w = csv_writer(&path, &header)?;
    for k in 1..=2usize {
        let germ = reference_normal(2, k);
        let (lo, hi) = modulus_range(k);
        let mut r = rng(cfg, 100 + k as u64);
        let mut starts = Vec::new();
        for h in 0..k {
            for _ in 0..o.starts_per_sector {
                let m1 = r.gen_range(lo..hi);
                let m2 = r.gen_range(lo..hi);
                let a1 = r.gen::<f64>() * TAU;
                let delta = r.gen_range(-START_SPREAD..START_SPREAD);
                let a2 = TAU * h as f64 / k as f64 + delta - a1;
                starts.push((h, vec![Complex64::from_polar(m1, a1), Complex64::from_polar(m2, a2)]));
            }
        }
        let reports: Vec<_> = starts
            .par_iter()
            .map(|(h, z)| {
                let trace = iterate_orbit_with(&germ, z, o.n_max, ASYMPTOTICS_BALL, Retention::Logarithmic(1.05));
                check_asymptotics(&trace, *h, RATIO_FROM.min(o.n_max))
            })
            .collect();
        let (mut err, mut rmin, mut rmax) = (0.0f64, f64::INFINITY, 0.0f64);
        for (i, ((h, _), rep)) in starts.iter().zip(&reports).enumerate() {
            match rep {
                Ok(rep) => {
                    err = err.max(rep.final_error);
                    rmin = rep.ratio_min.iter().fold(rmin, |a, &b| a.min(b));
                    rmax = rep.ratio_max.iter().fold(rmax, |a, &b| a.max(b));
                    let mut row = vec![k.to_string(), h.to_string(), i.to_string(), rep.n_final.to_string()];
                    row.extend([rep.final_error, rep.sup_error].map(num));
                    for j in 0..2 {
                        row.extend([num(rep.ratio_min[j]), num(rep.ratio_max[j])]);
                    }
                    w.write_record(&row)?;
                }
                Err(_) => err = f64::INFINITY,
            }
        }
        checks.push(Check::below(
            format!("k={k}: max |n^(1/k) u_n - zeta^h| at n = {}", o.n_max),
            err,
            cfg.tol("asymptotics"),
        ));
        checks.push(Check::within(
            format!("k={k}: min |z_n^j| n^(1/(kd))"),
            rmin,
            cfg.tol("ratio_min"),
            cfg.tol("ratio_max"),
        ));
        checks.push(Check::within(
            format!("k={k}: max |z_n^j| n^(1/(kd))"),
            rmax,
            cfg.tol("ratio_min"),
            cfg.tol("ratio_max"),
        ));
    }
    w.flush()?;
    checks.push(Check::below(
        "runtime (s)",
        t.elapsed().as_secs_f64(),
        cfg.tol("orbit_runtime"),
    ));
    Ok(Outcome {
        checks,
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct MarginsDoc {
    sector: f64,
    argument: f64,
    domination: f64,
    drift: f64,
}

#[derive(Serialize)]
struct TrialDoc {
    r: f64,
    failures: usize,
    margins: Vec<MarginsDoc>,
}

/// `find_r0` output; infinite margins serialize as `null`.
#[derive(Serialize)]
pub struct CertificateDoc {
    d: usize,
    k: usize,
    r0: f64,
    theta: f64,
    beta: f64,
    samples: usize,
    trials: Vec<TrialDoc>,
}

impl CertificateDoc {
    pub fn new(g: &GermSpec, c: &R0Certificate) -> Self {
        Self {
            d: g.dim(),
            k: g.k(),
            r0: c.r0,
            theta: c.theta,
            beta: c.beta,
            samples: c.samples,
            trials: c
                .trials
                .iter()
                .map(|t| TrialDoc {
                    r: t.r,
                    failures: t.failures,
                    margins: t
                        .margins
                        .iter()
                        .map(|m| MarginsDoc {
                            sector: m.sector,
                            argument: m.argument,
                            domination: m.domination,
                            drift: m.drift,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Offset of the fresh samples, past those used for certification.
const FRESH_OFFSET: u64 = 1_000_000;

pub fn invariance(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let b = &cfg.basin;
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    let cases = [
        ("normal-k1", reference_normal(2, 1), b.beta, false),
        ("normal-k2", reference_normal(2, 2), b.beta, false),
        ("perturbed", fatou_perturbed(), b.beta.max(0.45), true),
    ];
    for (i, (name, germ, beta, tighten)) in cases.into_iter().enumerate() {
        let cert = find_r0(&germ, b.theta, beta, b.samples).map_err(|e| CliError::Runtime(e.into()))?;
        let path = dir.join(format!("certificate-{name}.json"));
        write_json(&path, &CertificateDoc::new(&germ, &cert))?;
        artifacts.push(path);
        let basins: Vec<BasinParams> = (0..germ.k())
            .map(|h| {
                let p = cert.params(&germ, h);
                if tighten {
                    tightened(&p)
                } else {
                    p
                }
            })
            .collect();
        let offset = FRESH_OFFSET + halton_offset(cfg, 200 + i as u64);
        let mut stayed = 0usize;
        let mut total = 0usize;
        let mut shared = 0usize;
        for p in &basins {
            for z in sample_basin(p, b.samples, offset) {
                total += 1;
                if in_basin(&germ.evaluate(&z), p).is_in() {
                    stayed += 1;
                }
                shared += basins.iter().filter(|q| q.h != p.h && in_basin(&z, q).is_in()).count();
            }
        }
        checks.push(Check::equal(
            format!("{name}: fraction of F(z) back in B_h (R0 = {})", cert.r0),
            stayed as f64 / total.max(1) as f64,
            1.0,
        ));
        if germ.k() > 1 {
            checks.push(Check::equal(
                format!("{name}: samples in two basins"),
                shared as f64,
                0.0,
            ));
        }
    }
    Ok(Outcome { checks, artifacts })
}

/// Uniform point of the ball `‖z‖₂ <= radius` in `C^d`.
fn ball_point<R: Rng>(r: &mut R, d: usize, radius: f64) -> Vec<Complex64> {
    loop {
        let x: Vec<f64> = (0..2 * d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 <= 1.0 {
            return x.chunks(2).map(|p| Complex64::new(p[0], p[1]) * radius).collect();
        }
    }
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Basin(h) => format!("basin-{h}"),
        Verdict::SiegelHyperplane(j) => format!("siegel-{}", j + 1),
        Verdict::Escaped => "escaped".into(),
        Verdict::Undecided => "undecided".into(),
    }
}

pub fn trichotomy(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let o = &cfg.orbit;
    let germ = reference_normal(2, 1);
    let cert = find_r0(&germ, TRICHOTOMY_THETA, TRICHOTOMY_BETA, cfg.basin.samples)
        .map_err(|e| CliError::Runtime(e.into()))?;
    let basins: Vec<BasinParams> = (0..germ.k()).map(|h| cert.params(&germ, h)).collect();
    let mut r = rng(cfg, 300);
    let starts: Vec<Vec<Complex64>> = (0..o.starts).map(|_| ball_point(&mut r, 2, o.start_radius)).collect();
    let verdicts: Vec<_> = starts
        .par_iter()
        .map(|z| classify_stable_orbit(&germ, z, o.ball, o.n_max, &basins))
        .collect();
    let path = dir.join("verdicts.csv");
    let header = [
        "start",
        "verdict",
        "first_entry",
        "steps",
        "final_norm",
        "min_coordinate",
    ]
    .map(String::from);
    let mut w = csv_writer(&path, &header)?;
    let mut counts = [0usize; 4];
    for (i, v) in verdicts.iter().enumerate() {
        counts[match v.verdict {
            Verdict::Basin(_) => 0,
            Verdict::SiegelHyperplane(_) => 1,
            Verdict::Escaped => 2,
            Verdict::Undecided => 3,
        }] += 1;
        w.write_record([
            i.to_string(),
            verdict_name(v.verdict),
            v.first_entry.map(|n| n.to_string()).unwrap_or_default(),
            v.steps.to_string(),
            num(v.final_norm),
            num(v.min_coordinate),
        ])?;
    }
    w.flush()?;
    let mut checks = vec![
        Check::equal("undecided orbits", counts[3] as f64, 0.0),
        Check::flag(
            "basin orbits present",
            counts[0] > 0,
            format!("{} basin, {} Siegel, {} escaped", counts[0], counts[1], counts[2]),
        ),
    ];
    let from = ((o.n_max as f64 * DIRECTION_FROM) as u64).max(1);
    let to = o.n_max * DIRECTION_SPAN;
    let retention = Retention::Window {
        from,
        to,
        stride: o.stride,
    };
    let chosen: Vec<(usize, &Vec<Complex64>)> = verdicts
        .iter()
        .zip(&starts)
        .filter_map(|(v, z)| match v.verdict {
            Verdict::Basin(h) => Some((h, z)),
            _ => None,
        })
        .take(DIRECTION_ORBITS)
        .collect();
    let dpath = dir.join("directions.csv");
    let mut dw = csv_writer(&dpath, &["orbit", "n", "arg_z2", "arg_sum_deviation"].map(String::from))?;
    let (mut arg_sum, mut gap, mut cond) = (0.0f64, 0.0f64, 0.0f64);
    for (i, (h, z)) in chosen.iter().enumerate() {
        let trace = iterate_orbit_with(&germ, z, to, o.ball, retention);
        let center = TAU * *h as f64 / germ.k() as f64;
        for s in 0..trace.len() {
            let p = trace.point(s);
            let dev = oneres_core::basins::wrap_angle(p.iter().map(|c| c.arg()).sum::<f64>() - center);
            dw.write_record([i.to_string(), trace.step(s).to_string(), num(p[1].arg()), num(dev)])?;
        }
        match direction_accumulation(&trace, *h, from, to) {
            Ok(rep) => {
                arg_sum = arg_sum.max(rep.arg_sum_deviation.abs());
                gap = gap.max(rep.max_gap);
                cond = cond.max(rep.condition_number);
            }
            Err(_) => (arg_sum, gap, cond) = (PI, TAU, f64::INFINITY),
        }
    }
    dw.flush()?;
    checks.push(Check::flag(
        "direction orbits",
        !chosen.is_empty(),
        format!("{} basin orbits examined", chosen.len()),
    ));
    checks.push(Check::below("max |arg-sum - 2 pi h/k|", arg_sum, cfg.tol("arg_sum")));
    checks.push(Check::below("max argument gap (rad)", gap, cfg.tol("arg_gap")));
    checks.push(Check::below("direction condition number", cond, cfg.tol("condition")));
    Ok(Outcome {
        checks,
        artifacts: vec![path, dpath],
    })
}
