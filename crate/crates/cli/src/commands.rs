//! Subcommands.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use oneres_core::basins::{sample_basin, BasinParams};
use oneres_core::elimination::{brjuno_omega, brjuno_partial_sums, nicer_tail_preset};
use oneres_core::fatou::{tightened, FatouCoordinates, FatouOptions};
use oneres_core::germs::GermSpec;
use oneres_core::orbits::{classify_stable_orbit, iterate_orbit_with, Retention, Verdict};
use oneres_core::Complex64;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::{csv_writer, num, parse_point, point_columns, read_points, write_json, ConjugationDoc, GermDoc};
use crate::plot::{emit_plotdata, start_point, write_trace, PlotKind};
use crate::suites::{self, certify, halton_offset, rng, SuiteReport, SUITES};

#[derive(Debug, Parser)]
#[command(name = "oneres", version, about = "Numerical experiments on one-resonant germs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override `NAME=VAL`; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VAL")]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the canonical germ document.
    Germ,
    /// Iterate orbits and classify them.
    Orbit {
        /// Start `re,im,re,im,..`.
        #[arg(long)]
        start: Option<String>,
        /// CSV with columns `z1_re, z1_im, ..`.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Random starts in the ball of radius `orbit.start_radius`.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Certify `R0` and write the polar decomposition of the basins.
    Basin,
    /// Evaluate Fatou coordinates and their functional equations.
    Fatou {
        /// CSV with columns `z1_re, z1_im, ..`; basin samples when absent.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Eliminate tail monomials by a polynomial conjugation.
    Eliminate {
        #[arg(long, value_enum, default_value_t = EliminationMode::Level0)]
        mode: EliminationMode,
    },
    /// Build and verify a root germ and its basin permutation.
    Cycle {
        /// Order of the root; `cycle.p` when absent.
        #[arg(long)]
        p: Option<usize>,
    },
    /// Brjuno function of the multipliers over the non-resonant exponents.
    Brjuno,
    /// Write plot data.
    Plot {
        #[arg(long, value_enum)]
        kind: PlotKind,
    },
    /// Run a verification suite, or `all`.
    Suite { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EliminationMode {
    /// `A₀ = {|β| <= elimination.above}`, `A = {|β| > above, min β = 0}`.
    Level0,
    /// Push the tail to order `lα`.
    NicerTail,
}

impl GlobalArgs {
    pub fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.set_tolerances(&self.tol)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.out.join(name);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// Certified basins of `germ`, tightened when it has a tail.
fn basins(cfg: &ExperimentConfig, germ: &GermSpec) -> Result<Vec<BasinParams>, CliError> {
    let b = &cfg.basin;
    let params = match b.r {
        Some(r) => (0..germ.k())
            .map(|h| BasinParams::new(germ.dim(), germ.k(), h, r, b.theta, b.beta))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::core)?,
        None => certify(germ, b.theta, b.beta, b.samples)?,
    };
    if germ.has_tail() && b.r.is_none() {
        return Ok(params.iter().map(tightened).collect());
    }
    Ok(params)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.global.config()?;
    match cli.command {
        Command::Germ => germ(&cfg),
        Command::Orbit { start, points, random } => orbit(&cfg, start, points, random),
        Command::Basin => basin(&cfg),
        Command::Fatou { points } => fatou(&cfg, points),
        Command::Eliminate { mode } => eliminate(&cfg, mode),
        Command::Cycle { p } => cycle(&cfg, p.unwrap_or(cfg.cycle.p)),
        Command::Brjuno => brjuno(&cfg),
        Command::Plot { kind } => {
            let dir = out_dir(&cfg, "plot")?;
            announce(&emit_plotdata(&cfg, kind, &dir)?);
            Ok(())
        }
        Command::Suite { name } => suite(&cfg, &name),
    }
}

fn germ(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let doc = GermDoc::from_germ(&g);
    println!("{}", serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?);
    let path = out_dir(cfg, "germ")?.join("germ.json");
    write_json(&path, &doc)?;
    Ok(())
}

#[derive(Serialize)]
struct VerdictDoc {
    start: usize,
    z0: Vec<[f64; 2]>,
    verdict: String,
    /// Sector for basin orbits, 1-based coordinate for Siegel hyperplanes.
    index: Option<usize>,
    first_entry: Option<u64>,
    exits_after_entry: usize,
    steps: u64,
    final_norm: f64,
    min_coordinate: f64,
}

fn orbit(
    cfg: &ExperimentConfig,
    start: Option<String>,
    points: Option<PathBuf>,
    random: Option<usize>,
) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let d = g.dim();
    let o = &cfg.orbit;
    let starts: Vec<Vec<Complex64>> = match (start, points, random) {
        (Some(s), None, None) => vec![parse_point(&s, d)?],
        (None, Some(p), None) => read_points(&p, d)?,
        (None, None, Some(n)) => {
            let mut r = rng(cfg, 500);
            (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            Complex64::from_polar(
                                o.start_radius * r.gen::<f64>() / (d as f64).sqrt(),
                                r.gen::<f64>() * std::f64::consts::TAU,
                            )
                        })
                        .collect()
                })
                .collect()
        }
        (None, None, None) => vec![start_point(cfg, d)?],
        _ => return Err(CliError::config("give at most one of --start, --points, --random")),
    };
    let b = basins(cfg, &g)?;
    let dir = out_dir(cfg, "orbit")?;
    let retention = Retention::Window {
        from: 0,
        to: o.n_max,
        stride: o.stride,
    };
    let mut docs = Vec::new();
    let mut paths = Vec::new();
    for (i, z) in starts.iter().enumerate() {
        let trace = iterate_orbit_with(&g, z, o.n_max, o.ball, retention);
        let path = dir.join(format!("trace-{i}.csv"));
        write_trace(&path, &trace)?;
        paths.push(path);
        let v = classify_stable_orbit(&g, z, o.ball, o.n_max, &b);
        let (name, index) = match v.verdict {
            Verdict::Basin(h) => ("basin", Some(h)),
            Verdict::SiegelHyperplane(j) => ("siegel-hyperplane", Some(j + 1)),
            Verdict::Escaped => ("escaped", None),
            Verdict::Undecided => ("undecided", None),
        };
        docs.push(VerdictDoc {
            start: i,
            z0: z.iter().map(|c| [c.re, c.im]).collect(),
            verdict: name.into(),
            index,
            first_entry: v.first_entry,
            exits_after_entry: v.exits_after_entry,
            steps: v.steps,
            final_norm: v.final_norm,
            min_coordinate: v.min_coordinate,
        });
    }
    let path = dir.join("verdicts.json");
    write_json(&path, &docs)?;
    paths.push(path);
    announce(&paths);
    Ok(())
}

fn basin(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let b = &cfg.basin;
    let dir = out_dir(cfg, "basin")?;
    let cert = oneres_core::basins::find_r0(&g, b.theta, b.beta, b.samples).map_err(|e| CliError::Runtime(e.into()))?;
    let path = dir.join("certificate.json");
    write_json(&path, &suites::orbits::CertificateDoc::new(&g, &cert))?;
    println!("R0 = {}", cert.r0);
    let data = oneres_core::basins::polar_sample(
        &suites::atlas::atlas_params(cfg, g.dim(), g.k())?,
        suites::atlas::ATLAS_POINTS,
    );
    let mut paths = vec![path];
    paths.extend(suites::atlas::write_polar(&data, g.dim(), &dir)?);
    announce(&paths);
    Ok(())
}

fn fatou(cfg: &ExperimentConfig, points: Option<PathBuf>) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let d = g.dim();
    let b = basins(cfg, &g)?;
    let opts = FatouOptions {
        n_max: cfg.fatou.n_max,
        tol: cfg.tol("fatou_stop"),
        window: cfg.fatou.window,
    };
    let fc = FatouCoordinates::new(&g, b.clone())
        .map_err(CliError::core)?
        .with_options(opts);
    let shifted = fc.clone().with_options(FatouOptions {
        window: 2 * opts.window,
        ..opts
    });
    let pts = match points {
        Some(p) => read_points(&p, d)?,
        None => b
            .iter()
            .flat_map(|p| sample_basin(p, cfg.fatou.samples / b.len(), halton_offset(cfg, 600)))
            .collect(),
    };
    let dir = out_dir(cfg, "fatou")?;
    let path = dir.join("fatou.csv");
    let mut header = point_columns(d);
    header.extend(["h", "psi_re", "psi_im", "psi_depth", "psi_est_error"].map(String::from));
    for j in 2..=d {
        header.extend([format!("tau{j}_re"), format!("tau{j}_im"), format!("tau{j}_est_error")]);
    }
    header.extend(["abel_residual", "tau_residual", "sigma_residual", "status"].map(String::from));
    let mut w = csv_writer(&path, &header)?;
    let mult = g.multipliers();
    let m = g.m();
    for z in &pts {
        let mut row: Vec<String> = z.iter().flat_map(|c| [num(c.re), num(c.im)]).collect();
        let pair = fc
            .evaluate(z)
            .and_then(|a| shifted.evaluate(&g.evaluate(z)).map(|b| (a, b)));
        match pair {
            Ok((a, b)) => {
                row.extend([
                    a.h.to_string(),
                    num(a.psi.value.re),
                    num(a.psi.value.im),
                    a.psi.depth.to_string(),
                    num(a.psi.est_error),
                ]);
                for t in &a.tau {
                    row.extend([num(t.value.re), num(t.value.im), num(t.est_error)]);
                }
                let abel = (b.psi.value - a.psi.value - 1.0).norm();
                let shrink = (a.psi.value / (a.psi.value + 1.0)).powf(1.0 / m as f64);
                let mut tau: f64 = 0.0;
                let mut sigma = (fc.sigma_one_of(&b) - mult.lambda(0) * fc.sigma_one_of(&a) * shrink).norm();
                for j in 1..d {
                    tau = tau.max((b.tau[j - 1].value - mult.lambda(j) * a.tau[j - 1].value).norm());
                    sigma = sigma.max((b.sigma(j, m) - mult.lambda(j) * a.sigma(j, m) * shrink).norm());
                }
                row.extend([num(abel), num(tau), num(sigma), "ok".into()]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 5 + 3 * (d - 1) + 3));
                row.push(e.to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    announce(&[path]);
    Ok(())
}

fn eliminate(cfg: &ExperimentConfig, mode: EliminationMode) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let r = match mode {
        EliminationMode::Level0 => suites::elimination::level_zero(cfg, &g)?.3,
        EliminationMode::NicerTail => {
            nicer_tail_preset(&g, cfg.elimination.cap).map_err(|e| CliError::Runtime(e.into()))?
        }
    };
    let dir = out_dir(cfg, "eliminate")?;
    let json = dir.join("conjugation.json");
    write_json(&json, &ConjugationDoc::new(&r))?;
    let report = suites::elimination::text_report(&g, &r, cfg.tol("surviving"));
    print!("{report}");
    let txt = dir.join("report.txt");
    std::fs::write(&txt, report)?;
    announce(&[json, txt]);
    Ok(())
}

fn cycle(cfg: &ExperimentConfig, p: usize) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let dir = out_dir(cfg, "cycle")?;
    let run = suites::cycles::run_cycle(cfg, &g, p, &dir)?;
    println!(
        "degree {}  max deviation {:e}  targets {:?}  success {:?}",
        run.report.degree, run.report.max_deviation, run.permutation.targets, run.permutation.success
    );
    announce(&run.artifacts);
    Ok(())
}

#[derive(Serialize)]
struct BrjunoLevelDoc {
    m: u32,
    omega: f64,
    /// `(exponent, 1-based component)` of the minimum.
    witness: Option<(Vec<u16>, usize)>,
    increment: f64,
    partial_sum: f64,
}

#[derive(Serialize)]
struct BrjunoDoc {
    angles: Vec<f64>,
    levels: Vec<BrjunoLevelDoc>,
    decaying: bool,
}

fn brjuno(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = cfg.germ()?;
    let mult = g.multipliers();
    let rep = brjuno_omega(mult, &suites::elimination::brjuno_set(g.dim()), cfg.elimination.levels)
        .map_err(|e| CliError::Runtime(e.into()))?;
    let sums = brjuno_partial_sums(&rep);
    let doc = BrjunoDoc {
        angles: mult.angles().to_vec(),
        levels: rep
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| BrjunoLevelDoc {
                m: l.m,
                omega: l.omega,
                witness: l.witness.as_ref().map(|(e, j)| (e.exponents().to_vec(), j + 1)),
                increment: sums.increments[i],
                partial_sum: sums.sums[i],
            })
            .collect(),
        decaying: sums.decaying,
    };
    let path = out_dir(cfg, "brjuno")?.join("brjuno.json");
    write_json(&path, &doc)?;
    announce(&[path]);
    Ok(())
}

/// Runs `name` (or every suite for `all`), printing one line per suite.
pub fn run_suites(cfg: &ExperimentConfig, name: &str) -> Result<Vec<SuiteReport>, CliError> {
    let names: Vec<&str> = if name == "all" {
        SUITES.iter().map(|s| s.name).collect()
    } else {
        vec![name]
    };
    let mut reports = Vec::new();
    for n in names {
        let r = suites::run_suite(cfg, n)?;
        println!("{}  [{:.2} s]", r.summary_line(), r.elapsed_s);
        reports.push(r);
    }
    Ok(reports)
}

fn suite(cfg: &ExperimentConfig, name: &str) -> Result<(), CliError> {
    let reports = run_suites(cfg, name)?;
    match reports.iter().find_map(|r| r.first_failure().map(|c| (r, c))) {
        Some((r, c)) => Err(CliError::SuiteFailed {
            suite: r.suite.clone(),
            check: c.name.clone(),
        }),
        None => Ok(()),
    }
}

/// Parses `args` and runs; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                crate::error::EXIT_CONFIG
            } else {
                crate::error::EXIT_PASS
            };
        }
    };
    match run(cli) {
        Ok(()) => crate::error::EXIT_PASS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
