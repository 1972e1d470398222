//! Verification suites, one per acceptance criterion, plus the `atlas` dataset.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use oneres_core::basins::{find_r0, BasinParams};
use oneres_core::germs::{make_multipliers, make_normal_form, make_perturbed, AngleScheme, GermSpec};
use oneres_core::{Complex64, MultiIndex, TruncatedSeriesMap};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::formats::write_json;

pub mod atlas;
pub mod cycles;
pub mod elimination;
pub mod fatou;
pub mod orbits;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < bound`; NaN fails.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("< {bound:e}"),
            pass: value < bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("in [{lo}, {hi}]"),
            pass: value >= lo && value <= hi,
        }
    }

    pub fn equal(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("= {expected}"),
            pass: value == expected,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, what: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: what.into(),
            pass: ok,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed_s: f64,
    pub artifacts: Vec<PathBuf>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    /// One line: `PASS name: title` or `FAIL name: title (check)`.
    pub fn summary_line(&self) -> String {
        match self.first_failure() {
            None if self.passed() => format!("PASS {}: {}", self.suite, self.title),
            None => format!("FAIL {}: {} (no checks)", self.suite, self.title),
            Some(c) => format!(
                "FAIL {}: {} ({} = {:e}, want {})",
                self.suite, self.title, c.name, c.value, c.bound
            ),
        }
    }
}

/// Output of one suite body.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

type SuiteFn = fn(&ExperimentConfig, &Path) -> Result<Outcome, CliError>;

pub struct Suite {
    pub name: &'static str,
    pub title: &'static str,
    run: SuiteFn,
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "fatou-equations",
        title: "Abel equation of the Fatou coordinate",
        run: fatou::abel,
    },
    Suite {
        name: "asymptotics",
        title: "orbit asymptotics u_n ~ zeta n^(-1/k), |z_n^j| ~ n^(-1/(kd))",
        run: orbits::asymptotics,
    },
    Suite {
        name: "basin-invariance",
        title: "F(B_h) in B_h with the certified R0, disjoint sectors",
        run: orbits::invariance,
    },
    Suite {
        name: "elimination",
        title: "small-divisor elimination of a level-0 tail",
        run: elimination::elimination,
    },
    Suite {
        name: "nicer-tail",
        title: "tail pushed past l*alpha by the preset run",
        run: elimination::nicer_tail,
    },
    Suite {
        name: "majorants",
        title: "sigma recursion and divisor-tree counting bounds",
        run: elimination::majorants,
    },
    Suite {
        name: "cycles",
        title: "root germ and basin permutation",
        run: cycles::cycles,
    },
    Suite {
        name: "linearization",
        title: "tau-linearization and cylinder model",
        run: fatou::linearization,
    },
    Suite {
        name: "brjuno",
        title: "Brjuno diagnostics",
        run: elimination::brjuno,
    },
    Suite {
        name: "trichotomy",
        title: "stable-orbit trichotomy and limit directions",
        run: orbits::trichotomy,
    },
    Suite {
        name: "atlas",
        title: "modulus and argument components of the local basins",
        run: atlas::atlas,
    },
];

pub fn find_suite(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

/// Runs one suite, writing `report.json` and its datasets under `out/<name>/`.
pub fn run_suite(cfg: &ExperimentConfig, name: &str) -> Result<SuiteReport, CliError> {
    let suite = find_suite(name).ok_or_else(|| {
        let names: Vec<_> = SUITES.iter().map(|s| s.name).collect();
        CliError::config(format!("unknown suite {name:?}; expected one of {}", names.join(", ")))
    })?;
    cfg.validate()?;
    let dir = cfg.out.join(suite.name);
    std::fs::create_dir_all(&dir)?;
    let t = Instant::now();
    let outcome = (suite.run)(cfg, &dir)?;
    let mut report = SuiteReport {
        suite: suite.name.to_string(),
        title: suite.title.to_string(),
        checks: outcome.checks,
        elapsed_s: t.elapsed().as_secs_f64(),
        artifacts: outcome.artifacts,
    };
    let path = dir.join("report.json");
    write_json(&path, &report)?;
    report.artifacts.push(path);
    Ok(report)
}

/// Independent stream `stream` of the configured seed.
pub fn rng(cfg: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

/// Multipliers `e^{±2πi√2}` (`d = 2`) or the square-root-of-primes scheme.
pub fn reference_normal(d: usize, k: usize) -> GermSpec {
    make_normal_form(
        make_multipliers(d, &AngleScheme::Default, 20).expect("default multipliers"),
        k,
    )
}

fn perturb(base: &GermSpec, l: usize, terms: &[([u16; 2], usize, Complex64)]) -> GermSpec {
    let mut tail = TruncatedSeriesMap::zero(2, 16);
    for (e, j, c) in terms {
        tail.add_term(MultiIndex::from_slice(e), *j, *c);
    }
    make_perturbed(base, tail, l).expect("reference tail")
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Perturbed germ of the Fatou suites: `d = 2`, `k = 1`, `l = 6`.
pub fn fatou_perturbed() -> GermSpec {
    perturb(
        &reference_normal(2, 1),
        6,
        &[
            ([6, 0], 0, c(0.01, 0.0)),
            ([3, 3], 1, c(0.0, 0.02)),
            ([0, 7], 0, c(0.01, 0.01)),
        ],
    )
}

/// Perturbed germ of the elimination suites: `d = 2`, `k = 1`, `l = 6`.
pub fn elimination_reference() -> GermSpec {
    perturb(
        &reference_normal(2, 1),
        6,
        &[
            ([6, 0], 0, c(0.01, 0.0)),
            ([0, 7], 0, c(0.0, 0.01)),
            ([1, 5], 1, c(0.02, 0.0)),
            ([3, 3], 0, c(0.01, 0.0)),
        ],
    )
}

/// Germ with tail terms below `lα = (6, 6)` in both components.
pub fn nicer_tail_reference() -> GermSpec {
    perturb(
        &reference_normal(2, 1),
        6,
        &[
            ([3, 3], 0, c(0.01, 0.0)),
            ([4, 2], 1, c(0.0, 0.02)),
            ([7, 0], 0, c(0.01, 0.0)),
        ],
    )
}

/// Germ from the configuration when one is given, `fallback` otherwise.
pub fn configured_germ(cfg: &ExperimentConfig, fallback: fn() -> GermSpec) -> Result<GermSpec, CliError> {
    if cfg.germ.is_some() || cfg.germ_file.is_some() {
        cfg.germ()
    } else {
        Ok(fallback())
    }
}

/// Halton offset of sample stream `stream` under the configured seed.
pub fn halton_offset(cfg: &ExperimentConfig, stream: u64) -> u64 {
    (cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(1_000_003)) % (1 << 40)
}

/// `find_r0` on every sector, as basin parameters.
pub fn certify(g: &GermSpec, theta: f64, beta: f64, samples: usize) -> Result<Vec<BasinParams>, CliError> {
    let cert = find_r0(g, theta, beta, samples).map_err(|e| CliError::Runtime(e.into()))?;
    Ok((0..g.k()).map(|h| cert.params(g, h)).collect())
}
