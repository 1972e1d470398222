use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use oneres_core::elimination::{
    brjuno_omega, brjuno_partial_sums, majorant_diagnostics, nicer_tail_preset, non_normal_form_terms,
    solve_homological, ConjugationResult, ExponentSet, MajorantInput,
};
use oneres_core::germs::{make_multipliers, AngleScheme, GermSpec};
use oneres_core::{evaluate_series, Complex64, Error, MultiIndex, TruncatedSeriesMap};

use super::{configured_germ, elimination_reference, nicer_tail_reference, rng, Check, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, write_json, ConjugationDoc};

/// Radius of the pointwise conjugation check.
const POINT_RADIUS: f64 = 1e-2;
const POINTS: usize = 100;
/// Degree of the tail-pushing run.
const NICER_TAIL_CAP: usize = 14;
/// Range of `m` over which the increments must strictly decrease.
const DECREASING_FROM: usize = 3;

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.into())
}

/// Level-0 elimination: `A₀ = {|β| <= above}`, `A = {|β| > above, min β = 0}`.
pub fn level_zero(
    cfg: &ExperimentConfig,
    germ: &GermSpec,
) -> Result<(TruncatedSeriesMap, ExponentSet, ExponentSet, ConjugationResult), CliError> {
    let e = &cfg.elimination;
    let f = germ.to_series(e.cap);
    let a0 = ExponentSet::up_to_degree(e.above);
    let a = ExponentSet::MinLevel {
        level: 0,
        above: e.above,
    };
    let r = solve_homological(&f, &a0, &a, e.cap).map_err(runtime)?;
    Ok((f, a0, a, r))
}

/// Worst `‖H(G(z)) - F(H(z))‖_∞` over seeded points with `‖z‖₂ <= POINT_RADIUS`.
pub fn pointwise_error(cfg: &ExperimentConfig, f: &TruncatedSeriesMap, r: &ConjugationResult) -> f64 {
    let mut g = rng(cfg, 400);
    let d = f.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..POINTS {
        let mut z: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)))
            .collect();
        let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let s = POINT_RADIUS * g.gen::<f64>() / n.max(f64::MIN_POSITIVE);
        z.iter_mut().for_each(|c| *c *= s);
        let lhs = evaluate_series(&r.h, &evaluate_series(&r.g, &z));
        let rhs = evaluate_series(f, &evaluate_series(&r.h, &z));
        let e = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(e);
    }
    worst
}

/// Human-readable summary of a conjugation run.
pub fn text_report(germ: &GermSpec, r: &ConjugationResult, tol: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "dimension {}  k {}  l {}  cap {}",
        germ.dim(),
        germ.k(),
        germ.l(),
        r.cap
    );
    let _ = writeln!(s, "stages {}", r.stages);
    let _ = writeln!(s, "residual |F∘H - H∘G| = {:e}", r.residual);
    match r.divisor_floor {
        Some(x) => {
            let _ = writeln!(s, "smallest divisor {x:e}");
        }
        None => {
            let _ = writeln!(s, "no divisors");
        }
    }
    let terms = non_normal_form_terms(&r.g, germ, tol);
    let _ = writeln!(s, "non-normal-form terms of G above {tol:e}: {}", terms.len());
    for (e, j, c) in terms {
        let _ = writeln!(s, "  z^{e} component {}: {:e} {:+e}i", j + 1, c.re, c.im);
    }
    s
}

pub fn elimination(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let germ = configured_germ(cfg, elimination_reference)?;
    let (f, a0, a, r) = level_zero(cfg, &germ)?;
    let mut eliminated: f64 = 0.0;
    let mut kept: f64 = 0.0;
    for (i, v) in r.g.iter() {
        if a.contains(i) {
            eliminated = v.iter().map(|x| x.norm()).fold(eliminated, f64::max);
        }
        if a0.contains(i) {
            let fv = f.coefficient(i);
            for (j, x) in v.iter().enumerate() {
                let y = fv.map(|c| c[j]).unwrap_or_default();
                kept = kept.max((x - y).norm());
            }
        }
    }
    let json = dir.join("conjugation.json");
    write_json(&json, &ConjugationDoc::new(&r))?;
    let txt = dir.join("report.txt");
    std::fs::write(&txt, text_report(&germ, &r, cfg.tol("surviving")))?;
    let checks = vec![
        Check::below("max |g_alpha| over A", eliminated, cfg.tol("eliminated")),
        Check::equal("max |g_alpha - f_alpha| over A0", kept, 0.0),
        Check::below("residual F∘H - H∘G", r.residual, cfg.tol("residual")),
        Check::below(
            "max |H(G(z)) - F(H(z))|",
            pointwise_error(cfg, &f, &r),
            cfg.tol("pointwise"),
        ),
    ];
    Ok(Outcome {
        checks,
        artifacts: vec![json, txt],
    })
}

pub fn nicer_tail(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let germ = configured_germ(cfg, nicer_tail_reference)?;
    let r = nicer_tail_preset(&germ, NICER_TAIL_CAP).map_err(runtime)?;
    let l_alpha = MultiIndex::diagonal(germ.dim(), germ.l() as u16);
    let tol = cfg.tol("surviving");
    let surviving = non_normal_form_terms(&r.g, &germ, tol);
    let below = surviving
        .iter()
        .filter(|(e, _, _)| !l_alpha.le_componentwise(e))
        .count();
    let json = dir.join("conjugation.json");
    write_json(&json, &ConjugationDoc::new(&r))?;
    let txt = dir.join("report.txt");
    std::fs::write(&txt, text_report(&germ, &r, tol))?;
    let checks = vec![
        Check::equal(
            format!("surviving terms not >= {l_alpha} ({} survive)", surviving.len()),
            below as f64,
            0.0,
        ),
        Check::below("residual F∘H - H∘G", r.residual, cfg.tol("residual")),
    ];
    Ok(Outcome {
        checks,
        artifacts: vec![json, txt],
    })
}

pub fn majorants(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let germ = configured_germ(cfg, elimination_reference)?;
    let d = germ.dim();
    let (f, _, _, r) = level_zero(cfg, &germ)?;
    let rep = majorant_diagnostics(d, 20, Some(MajorantInput { f: &f, conj: &r }));
    let path = dir.join("sigma.csv");
    let mut w = csv_writer(&path, &["r", "sigma", "closed_form", "exact"].map(String::from))?;
    for (i, (s, c)) in rep.sigma.iter().zip(&rep.closed_form).enumerate() {
        let exact = rep.sigma_exact[i].map(|x| x.to_string()).unwrap_or_default();
        w.write_record([(i + 1).to_string(), num(*s), num(*c), exact])?;
    }
    w.flush()?;
    let mut checks = vec![
        Check::below(
            "sigma vs closed form (relative)",
            rep.max_relative_error,
            cfg.tol("sigma"),
        ),
        Check::flag(
            "generating-function identity",
            rep.identity_defect == Some(0),
            "exact integer defect 0",
        ),
    ];
    match &rep.bounds {
        Some(b) => {
            checks.push(Check::flag(
                "divisor trees recorded",
                b.counting_checks > 0,
                format!("{} nodes checked", b.counting_checks),
            ));
            checks.push(Check::equal(
                "N_m^j(alpha) > 2|alpha|/m - 1",
                b.counting_violations.len() as f64,
                0.0,
            ));
            checks.push(Check::equal(
                "|h_alpha| above the majorant",
                b.h_violations.len() as f64,
                0.0,
            ));
            checks.push(Check::flag(
                "coefficient growth",
                b.growth_max <= b.growth_bound,
                format!("{:e} <= {:e}", b.growth_max, b.growth_bound),
            ));
        }
        None => checks.push(Check::flag("bounds", false, "bound checks ran")),
    }
    Ok(Outcome {
        checks,
        artifacts: vec![path],
    })
}

/// `A₁ = {|β| > d + 1, min β = 1}`.
pub fn brjuno_set(d: usize) -> ExponentSet {
    ExponentSet::level(1, d)
}

/// `min |λ₁^p λ₂^q - λ_i|` over `(p, q) ∈ A` with `2 <= p + q <= bound`, from the complex multipliers.
fn scan(l: [Complex64; 2], a: &ExponentSet, bound: usize) -> f64 {
    let mut best: f64 = 1.0;
    let mut row = Complex64::new(1.0, 0.0);
    for p in 0..=bound {
        let mut x = row;
        for q in 0..=bound - p {
            if p + q >= 2 && a.contains(&MultiIndex::from_slice(&[p as u16, q as u16])) {
                for li in l {
                    best = best.min((x - li).norm());
                }
            }
            x *= l[1];
        }
        row *= l[0];
    }
    best
}

pub fn brjuno(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let mult = make_multipliers(2, &AngleScheme::Default, 20).map_err(CliError::core)?;
    let levels = cfg.elimination.levels;
    let a = brjuno_set(2);
    let rep = brjuno_omega(&mult, &a, levels).map_err(runtime)?;
    let sums = brjuno_partial_sums(&rep);
    let l = [mult.lambda(0), mult.lambda(1)];
    let path = dir.join("brjuno.csv");
    let mut w = csv_writer(
        &path,
        &["m", "omega", "scan", "increment", "partial_sum"].map(String::from),
    )?;
    let mut diff: f64 = 0.0;
    for (i, lvl) in rep.levels.iter().enumerate() {
        let s = scan(l, &a, 1 << lvl.m);
        diff = diff.max((s - lvl.omega).abs());
        w.write_record([
            lvl.m.to_string(),
            num(lvl.omega),
            num(s),
            num(sums.increments[i]),
            num(sums.sums[i]),
        ])?;
    }
    w.flush()?;
    let resonant = ExponentSet::explicit([MultiIndex::from_slice(&[2, 1])]);
    let zero = matches!(brjuno_omega(&mult, &resonant, 3), Err(Error::ZeroDivisor { .. }));
    let checks = vec![
        Check::below("max |omega - exhaustive scan|", diff, cfg.tol("scan")),
        Check::flag(
            format!("increments strictly decrease for m = {DECREASING_FROM}..{levels}"),
            sums.strictly_decreasing(DECREASING_FROM, levels as usize),
            "strictly decreasing",
        ),
        Check::flag("resonant set {(2,1)}", zero, "ZeroDivisor"),
    ];
    Ok(Outcome {
        checks,
        artifacts: vec![path],
    })
}
