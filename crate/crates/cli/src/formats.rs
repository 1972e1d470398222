//! JSON documents and CSV writers.
//!
//! Monomial lists use 1-based `component` indices; exponents are listed per coordinate.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use oneres_core::cycles::RootGermSpec;
use oneres_core::elimination::ConjugationResult;
use oneres_core::germs::{make_multipliers, make_normal_form, make_perturbed, AngleScheme, GermSpec};
use oneres_core::{Complex64, MultiIndex, TruncatedSeriesMap};

use crate::error::CliError;

/// Degree of the resonance scan run when a germ document is loaded.
pub const SCAN_DEGREE: u32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDoc {
    pub exponent: Vec<u16>,
    pub component: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermDoc {
    pub d: usize,
    pub k: usize,
    /// Tail order; defaults to `2kd + 2` without a tail and to the tail's lowest degree otherwise.
    #[serde(default)]
    pub l: Option<usize>,
    /// `θ_j` with `λ_j = e^{2πiθ_j}`; the default scheme when absent.
    #[serde(default)]
    pub angles: Option<Vec<f64>>,
    #[serde(default)]
    pub tail: Vec<MonomialDoc>,
}

impl Default for GermDoc {
    fn default() -> Self {
        Self {
            d: 2,
            k: 1,
            l: None,
            angles: None,
            tail: Vec::new(),
        }
    }
}

fn monomials(s: &TruncatedSeriesMap) -> Vec<MonomialDoc> {
    let mut out = Vec::new();
    for (idx, v) in s.iter() {
        for (j, c) in v.iter().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                out.push(MonomialDoc {
                    exponent: idx.exponents().to_vec(),
                    component: j + 1,
                    re: c.re,
                    im: c.im,
                });
            }
        }
    }
    out
}

fn series_from(d: usize, cap: usize, terms: &[MonomialDoc]) -> Result<TruncatedSeriesMap, CliError> {
    let mut s = TruncatedSeriesMap::zero(d, cap);
    for t in terms {
        if t.exponent.len() != d {
            return Err(CliError::config(format!(
                "exponent {:?} has {} entries, expected {d}",
                t.exponent,
                t.exponent.len()
            )));
        }
        if t.component == 0 || t.component > d {
            return Err(CliError::config(format!("component {} outside 1..={d}", t.component)));
        }
        s.add_term(
            MultiIndex::from_slice(&t.exponent),
            t.component - 1,
            Complex64::new(t.re, t.im),
        );
    }
    Ok(s)
}

impl GermDoc {
    pub fn normal_form(d: usize, k: usize) -> Self {
        Self {
            d,
            k,
            ..Self::default()
        }
    }

    pub fn to_germ(&self) -> Result<GermSpec, CliError> {
        let scheme = match &self.angles {
            Some(a) => AngleScheme::Explicit(a.clone()),
            None => AngleScheme::Default,
        };
        if self.k == 0 {
            return Err(CliError::config("k must be at least 1"));
        }
        let mult = make_multipliers(self.d, &scheme, SCAN_DEGREE).map_err(CliError::core)?;
        let base = make_normal_form(mult, self.k);
        if self.tail.is_empty() {
            return Ok(base);
        }
        let top = self
            .tail
            .iter()
            .map(|t| t.exponent.iter().map(|&e| e as usize).sum::<usize>());
        let hi = top.clone().max().unwrap_or(0);
        let l = self.l.unwrap_or_else(|| top.min().unwrap_or(0));
        let tail = series_from(self.d, hi, &self.tail)?;
        make_perturbed(&base, tail, l).map_err(CliError::core)
    }

    pub fn from_germ(g: &GermSpec) -> Self {
        Self {
            d: g.dim(),
            k: g.k(),
            l: Some(g.l()),
            angles: Some(g.multipliers().angles().to_vec()),
            tail: monomials(g.tail()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub dim: usize,
    pub cap: usize,
    pub terms: Vec<MonomialDoc>,
}

impl SeriesDoc {
    pub fn from_series(s: &TruncatedSeriesMap) -> Self {
        Self {
            dim: s.dim(),
            cap: s.cap(),
            terms: monomials(s),
        }
    }

    pub fn to_series(&self) -> Result<TruncatedSeriesMap, CliError> {
        series_from(self.dim, self.cap, &self.terms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationDoc {
    pub h: SeriesDoc,
    pub g: SeriesDoc,
    pub residual: f64,
    pub divisor_floor: Option<f64>,
    pub stages: usize,
    pub cap: usize,
}

impl ConjugationDoc {
    pub fn new(r: &ConjugationResult) -> Self {
        Self {
            h: SeriesDoc::from_series(&r.h),
            g: SeriesDoc::from_series(&r.g),
            residual: r.residual,
            divisor_floor: r.divisor_floor,
            stages: r.stages,
            cap: r.cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootDoc {
    pub base: GermDoc,
    pub p: usize,
    pub mu_angles: Vec<f64>,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl RootDoc {
    pub fn new(r: &RootGermSpec) -> Self {
        Self {
            base: GermDoc::from_germ(&r.base),
            p: r.p,
            mu_angles: r.mu_angles.clone(),
            a: [r.a.re, r.a.im],
            b: [r.b.re, r.b.im],
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// CSV writer with a header row, `,` separator and LF line endings.
pub fn csv_writer(path: &Path, header: &[String]) -> Result<csv::Writer<File>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

/// Shortest round-trip representation, so equal runs give equal bytes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `z1_re, z1_im, ..` for `d` coordinates.
pub fn point_columns(d: usize) -> Vec<String> {
    (1..=d).flat_map(|j| [format!("z{j}_re"), format!("z{j}_im")]).collect()
}

/// Reads points from a CSV whose columns are `z1_re, z1_im, ..`; extra columns are ignored.
pub fn read_points(path: &Path, d: usize) -> Result<Vec<Vec<Complex64>>, CliError> {
    let mut r =
        csv::Reader::from_path(path).map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| CliError::config(e.to_string()))?.clone();
    let cols: Vec<usize> = point_columns(d)
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| CliError::config(format!("{}: missing column {name}", path.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::config(e.to_string()))?;
        let vals: Vec<f64> = cols
            .iter()
            .map(|&c| {
                rec.get(c)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
            })
            .collect::<Result<_, _>>()?;
        out.push(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    Ok(out)
}

/// Parses `re,im,re,im,..` into a point of `C^d`.
pub fn parse_point(s: &str, d: usize) -> Result<Vec<Complex64>, CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::config(format!("point {s:?}: {e}")))?;
    if vals.len() != 2 * d {
        return Err(CliError::config(format!(
            "point {s:?} has {} numbers, expected {}",
            vals.len(),
            2 * d
        )));
    }
    Ok(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn germ_round_trip() {
        let doc = GermDoc {
            d: 2,
            k: 1,
            l: Some(6),
            angles: None,
            tail: vec![MonomialDoc {
                exponent: vec![6, 0],
                component: 1,
                re: 0.01,
                im: 0.0,
            }],
        };
        let g = doc.to_germ().unwrap();
        let back = GermDoc::from_germ(&g);
        assert_eq!(back.tail, doc.tail);
        assert_eq!(back.to_germ().unwrap(), g);
    }

    #[test]
    fn zero_based_component_rejected() {
        let doc = GermDoc {
            tail: vec![MonomialDoc {
                exponent: vec![6, 0],
                component: 0,
                re: 1.0,
                im: 0.0,
            }],
            ..GermDoc::default()
        };
        assert!(doc.to_germ().is_err());
    }

    #[test]
    fn point_parsing() {
        let p = parse_point("0.1, 0, -0.2,0.5", 2).unwrap();
        assert_eq!(p, [Complex64::new(0.1, 0.0), Complex64::new(-0.2, 0.5)]);
        assert!(parse_point("0.1,0", 2).is_err());
    }
}
