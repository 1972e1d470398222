//! Versioned JSON experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use oneres_core::germs::GermSpec;

use crate::error::CliError;
use crate::formats::{read_json, GermDoc};

pub const CONFIG_VERSION: u32 = 1;

/// Named tolerances and their defaults.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("abel", 1e-6),
    ("arg_gap", 0.1),
    ("arg_sum", 1e-2),
    ("asymptotics", 0.02),
    ("closure", 1e-14),
    ("condition", 1e3),
    ("cylinder", 1e-6),
    ("eliminated", 1e-10),
    ("fatou_runtime", 30.0),
    ("fatou_stop", 1e-12),
    ("linearization", 1e-6),
    ("orbit_runtime", 60.0),
    ("pointwise", 1e-8),
    ("ratio_max", 2.0),
    ("ratio_min", 0.5),
    ("residual", 1e-9),
    ("root", 1e-12),
    ("scan", 1e-12),
    ("sigma", 1e-10),
    ("surviving", 1e-10),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinConfig {
    pub theta: f64,
    pub beta: f64,
    /// Fixed `R`; certified with `find_r0` when absent.
    pub r: Option<f64>,
    pub samples: usize,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self {
            theta: 0.3,
            beta: 0.4,
            r: None,
            samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub n_max: u64,
    /// Escape radius.
    pub ball: f64,
    /// Radius of the ball random starts are drawn from.
    pub start_radius: f64,
    pub starts: usize,
    pub starts_per_sector: usize,
    /// Single start `re,im,..` for `orbit` and `plot`.
    pub start: Option<String>,
    /// Rows kept in orbit CSVs: every `stride`-th step.
    pub stride: u64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            n_max: 100_000,
            ball: 0.2,
            start_radius: 0.1,
            starts: 10_000,
            starts_per_sector: 20,
            start: None,
            stride: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FatouConfig {
    pub samples: usize,
    pub window: usize,
    pub n_max: usize,
}

impl Default for FatouConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            window: 32,
            n_max: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    pub p: usize,
    pub r: f64,
    pub samples: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            p: 2,
            r: 1e-2,
            samples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EliminationConfig {
    pub cap: usize,
    /// Lowest degree eliminated by `eliminate --mode level0`.
    pub above: usize,
    pub levels: u32,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        Self {
            cap: 12,
            above: 5,
            levels: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub germ: Option<GermDoc>,
    /// Germ document path, relative to the configuration file.
    pub germ_file: Option<PathBuf>,
    pub basin: BasinConfig,
    pub orbit: OrbitConfig,
    pub fatou: FatouConfig,
    pub cycle: CycleConfig,
    pub elimination: EliminationConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            germ: None,
            germ_file: None,
            basin: BasinConfig::default(),
            orbit: OrbitConfig::default(),
            fatou: FatouConfig::default(),
            cycle: CycleConfig::default(),
            elimination: EliminationConfig::default(),
            tolerances: BTreeMap::new(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut c: Self = read_json(path)?;
        if let Some(f) = &c.germ_file {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    c.germ_file = Some(dir.join(f));
                }
            }
        }
        Ok(c)
    }

    /// Applies `NAME=VAL` overrides.
    pub fn set_tolerances(&mut self, items: &[String]) -> Result<(), CliError> {
        for item in items {
            let (name, val) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--tol expects NAME=VAL, got {item:?}")))?;
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|e| CliError::config(format!("--tol {item}: {e}")))?;
            self.tolerances.insert(name.trim().to_string(), v);
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        if let Some(&v) = self.tolerances.get(name) {
            return v;
        }
        DEFAULT_TOLERANCES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| panic!("unknown tolerance {name}"))
    }

    pub fn germ_doc(&self) -> Result<GermDoc, CliError> {
        match (&self.germ, &self.germ_file) {
            (Some(_), Some(_)) => Err(CliError::config("give either germ or germ_file")),
            (Some(g), None) => Ok(g.clone()),
            (None, Some(p)) => read_json(p),
            (None, None) => Ok(GermDoc::default()),
        }
    }

    pub fn germ(&self) -> Result<GermSpec, CliError> {
        self.germ_doc()?.to_germ()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::config(format!(
                "unsupported version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        for (name, v) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(n, _)| n == name) {
                return Err(CliError::config(format!("unknown tolerance {name}")));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("tolerance {name} must be positive")));
            }
        }
        let g = self.germ()?;
        let (d, k) = (g.dim(), g.k());
        let b = &self.basin;
        if !(b.theta > 0.0 && b.theta < PI / (2.0 * k as f64)) {
            return Err(CliError::config(format!(
                "basin.theta = {} must lie in (0, pi/(2k)) = (0, {})",
                b.theta,
                PI / (2.0 * k as f64)
            )));
        }
        if !(b.beta > 0.0 && b.beta < 1.0 / d as f64) {
            return Err(CliError::config(format!(
                "basin.beta = {} must lie in (0, 1/d)",
                b.beta
            )));
        }
        if let Some(r) = b.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::config("basin.r must be positive"));
            }
        }
        let o = &self.orbit;
        let positive = [
            ("orbit.ball", o.ball),
            ("orbit.start_radius", o.start_radius),
            ("cycle.r", self.cycle.r),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("{name} must be positive")));
            }
        }
        let counts = [
            ("basin.samples", b.samples),
            ("orbit.starts", o.starts),
            ("orbit.starts_per_sector", o.starts_per_sector),
            ("fatou.samples", self.fatou.samples),
            ("fatou.window", self.fatou.window),
            ("cycle.samples", self.cycle.samples),
            ("cycle.p", self.cycle.p),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(CliError::config(format!("{name} must be at least 1")));
            }
        }
        if o.n_max == 0 || o.stride == 0 {
            return Err(CliError::config("orbit.n_max and orbit.stride must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_document_is_the_default() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn theta_range_depends_on_k() {
        let mut c = ExperimentConfig {
            germ: Some(GermDoc::normal_form(2, 2)),
            ..Default::default()
        };
        c.basin.theta = 0.8;
        assert!(matches!(c.validate(), Err(CliError::ConfigInvalid(_))));
        c.basin.theta = 0.7;
        c.validate().unwrap();
    }

    #[test]
    fn tolerance_overrides() {
        let mut c = ExperimentConfig::default();
        c.set_tolerances(&["abel=1e-5".into()]).unwrap();
        assert_eq!(c.tol("abel"), 1e-5);
        assert_eq!(c.tol("root"), 1e-12);
        c.set_tolerances(&["bogus=1".into()]).unwrap();
        assert!(c.validate().is_err());
        assert!(c.set_tolerances(&["abel".into()]).is_err());
        let mut c = ExperimentConfig::default();
        c.set_tolerances(&["abel=-1".into()]).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_version_rejected() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"version": 2}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
