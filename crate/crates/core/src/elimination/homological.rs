use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use num_complex::Complex64;

use super::brjuno::ZERO_DIVISOR;
use super::ExponentSet;
use crate::error::{Error, Result};
use crate::germs::GermSpec;
use crate::index::{indices_in_range, indices_of_degree, MultiIndex};
use crate::scalar::Scalar;
use crate::series::{compose, TruncatedSeriesMap};

/// Divisors below this count as resonances in the normalizing pass.
const RESONANCE_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DivisorRecord {
    pub index: MultiIndex,
    /// `ε_α = min_i |λ^α - λ_i|`.
    pub epsilon: f64,
    /// The minimizing component `i_α`.
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugationResult<S: Scalar = Complex64> {
    /// `H = id + h`, tangent to the identity.
    pub h: TruncatedSeriesMap<S>,
    pub g: TruncatedSeriesMap<S>,
    /// Max coefficient of `F∘H - H∘G` through the cap.
    pub residual: f64,
    /// Smallest `|λ^α - λ_i|` divided by; `None` if nothing was eliminated.
    pub divisor_floor: Option<f64>,
    /// One record per eliminated index.
    pub divisors: Vec<DivisorRecord>,
    pub stages: usize,
    pub cap: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Role {
    /// `g = f`, `h = 0`.
    Keep,
    /// `g = 0`, `h` solves the homological equation.
    Eliminate,
    /// `g` absorbs the right-hand side, `h = 0`.
    Free,
    /// Eliminate non-resonant components, keep resonant ones in `g`.
    Normalize,
}

struct Recursion<S: Scalar> {
    h: TruncatedSeriesMap<S>,
    g: TruncatedSeriesMap<S>,
    divisors: Vec<DivisorRecord>,
    floor: Option<f64>,
}

fn diagonal<S: Scalar>(f: &TruncatedSeriesMap<S>) -> Result<Vec<S>> {
    let lin = f.linear_part();
    let d = f.dim();
    let scale = lin.iter().flatten().map(S::abs).fold(0.0, f64::max);
    for (i, row) in lin.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if i != j && c.abs() > 1e-14 * scale {
                return Err(Error::InvalidParameter("linear part must be diagonal"));
            }
        }
    }
    let diag: Vec<S> = (0..d).map(|i| lin[i][i]).collect();
    if diag.iter().any(|c| c.is_zero()) {
        return Err(Error::SingularLinearPart);
    }
    Ok(diag)
}

fn lambda_power<S: Scalar>(diag: &[S], idx: &MultiIndex) -> S {
    let mut p = S::one();
    for (l, &e) in diag.iter().zip(idx.exponents()) {
        for _ in 0..e {
            p = p * *l;
        }
    }
    p
}

fn run<S: Scalar>(f: &TruncatedSeriesMap<S>, cap: usize, role: impl Fn(&MultiIndex) -> Role) -> Result<Recursion<S>> {
    let d = f.dim();
    if f.has_constant_term() {
        return Err(Error::NonzeroConstant);
    }
    let diag = diagonal(f)?;
    let mut big_h = TruncatedSeriesMap::identity(d, cap);
    let mut big_g = TruncatedSeriesMap::diagonal(&diag, cap);
    let mut divisors = Vec::new();
    let mut floor: Option<f64> = None;
    for n in 2..=cap {
        let fh = compose(f, &big_h, n)?;
        let hg = compose(&big_h, &big_g, n)?;
        let mut new_h = Vec::new();
        let mut new_g = Vec::new();
        for alpha in indices_of_degree(d, n) {
            let r = role(&alpha);
            if r == Role::Keep {
                if let Some(c) = f.coefficient(&alpha) {
                    for (i, v) in c.iter().enumerate() {
                        new_g.push((alpha.clone(), i, *v));
                    }
                }
                continue;
            }
            let e: Vec<S> = (0..d).map(|i| fh.get(&alpha, i) - hg.get(&alpha, i)).collect();
            match r {
                Role::Free => {
                    for (i, v) in e.into_iter().enumerate() {
                        new_g.push((alpha.clone(), i, v));
                    }
                }
                Role::Eliminate => {
                    let la = lambda_power(&diag, &alpha);
                    let mut best = (f64::INFINITY, 0);
                    for (i, v) in e.into_iter().enumerate() {
                        let div = la - diag[i];
                        let a = div.abs();
                        if a < ZERO_DIVISOR {
                            return Err(Error::ZeroDivisor {
                                exponent: alpha,
                                component: i,
                            });
                        }
                        if a < best.0 {
                            best = (a, i);
                        }
                        new_h.push((alpha.clone(), i, v / div));
                    }
                    floor = Some(floor.map_or(best.0, |x| x.min(best.0)));
                    divisors.push(DivisorRecord {
                        index: alpha,
                        epsilon: best.0,
                        component: best.1,
                    });
                }
                Role::Normalize => {
                    let la = lambda_power(&diag, &alpha);
                    for (i, v) in e.into_iter().enumerate() {
                        let div = la - diag[i];
                        let a = div.abs();
                        if a < RESONANCE_THRESHOLD {
                            new_g.push((alpha.clone(), i, v));
                        } else {
                            floor = Some(floor.map_or(a, |x| x.min(a)));
                            new_h.push((alpha.clone(), i, v / div));
                        }
                    }
                }
                Role::Keep => unreachable!(),
            }
        }
        for (a, i, v) in new_h {
            big_h.add_term(a, i, v);
        }
        for (a, i, v) in new_g {
            big_g.add_term(a, i, v);
        }
    }
    Ok(Recursion {
        h: big_h,
        g: big_g,
        divisors,
        floor,
    })
}

fn residual<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    h: &TruncatedSeriesMap<S>,
    g: &TruncatedSeriesMap<S>,
    cap: usize,
) -> Result<f64> {
    let lhs = compose(f, h, cap)?;
    let rhs = compose(h, g, cap)?;
    Ok(lhs.sub(&rhs).max_abs(cap))
}

/// Mechanical check of disjointness and conditions (1) and (2) through `cap`.
pub fn check_conditions<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    a0: &ExponentSet,
    a: &ExponentSet,
    cap: usize,
) -> Result<()> {
    let d = f.dim();
    let all = indices_in_range(d, 1, cap);
    for alpha in &all {
        let in0 = a0.contains(alpha);
        let in_a = a.contains(alpha);
        if in0 && in_a {
            return Err(Error::OverlappingSets(alpha.clone()));
        }
        if !(in0 || in_a) {
            continue;
        }
        // Closure under immediate predecessors gives closure under <=.
        for j in 0..d {
            if let Some(beta) = alpha.sub_unit(j) {
                if beta.is_zero() {
                    continue;
                }
                let ok = if in0 {
                    a0.contains(&beta)
                } else {
                    a0.contains(&beta) || a.contains(&beta)
                };
                if !ok {
                    return Err(Error::ConditionViolated {
                        condition: 1,
                        witness: alpha.clone(),
                        stage: None,
                    });
                }
            }
        }
    }
    check_condition_two(f, a0, a, cap)
}

/// Condition (2): sums of nonzero `A0` coefficients landing in `A0 ∪ A`, with
/// at least one nonlinear term, never have `e_J ∈ A`.
fn check_condition_two<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    a0: &ExponentSet,
    a: &ExponentSet,
    cap: usize,
) -> Result<()> {
    let items: Vec<(MultiIndex, usize)> = f
        .iter()
        .filter(|(b, _)| a0.contains(b) && b.degree() <= cap)
        .flat_map(|(b, c)| {
            c.iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(move |(j, _)| (b.clone(), j))
        })
        .collect();
    let d = f.dim();
    let target = |s: &MultiIndex| a0.contains(s) || a.contains(s);
    let mut seen: BTreeSet<(MultiIndex, MultiIndex, bool)> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let start = (MultiIndex::zero(d), MultiIndex::zero(d), false);
    queue.push_back(start);
    while let Some((sum, ej, nonlinear)) = queue.pop_front() {
        for (b, j) in &items {
            let s = sum.add(b);
            if s.degree() > cap || !target(&s) {
                continue;
            }
            let e = ej.add_unit(*j);
            let nl = nonlinear || b.degree() >= 2;
            if nl && a.contains(&e) {
                return Err(Error::ConditionViolated {
                    condition: 2,
                    witness: s,
                    stage: None,
                });
            }
            let state = (s, e, nl);
            if seen.insert(state.clone()) {
                queue.push_back(state);
            }
        }
    }
    Ok(())
}

/// Solves `F∘H = H∘G` degree by degree with `g = f` on `A0` and `g = 0` on `A`.
pub fn solve_homological<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    a0: &ExponentSet,
    a: &ExponentSet,
    cap: usize,
) -> Result<ConjugationResult<S>> {
    check_conditions(f, a0, a, cap)?;
    let rec = run(f, cap, |alpha| {
        if a0.contains(alpha) {
            Role::Keep
        } else if a.contains(alpha) {
            Role::Eliminate
        } else {
            Role::Free
        }
    })?;
    let residual = residual(f, &rec.h, &rec.g, cap)?;
    Ok(ConjugationResult {
        h: rec.h,
        g: rec.g,
        residual,
        divisor_floor: rec.floor,
        divisors: rec.divisors,
        stages: 1,
        cap,
    })
}

fn tag_stage(e: Error, stage: usize) -> Error {
    match e {
        Error::ConditionViolated { condition, witness, .. } => Error::ConditionViolated {
            condition,
            witness,
            stage: Some(stage),
        },
        e => e,
    }
}

/// Runs one elimination per level, each stage keeping `A0` and all earlier levels.
pub fn iterated_elimination<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    a0: &ExponentSet,
    levels: &[ExponentSet],
    cap: usize,
) -> Result<ConjugationResult<S>> {
    let d = f.dim();
    let mut g = f.clone().with_cap(cap);
    let mut h = TruncatedSeriesMap::identity(d, cap);
    let mut keep = a0.clone();
    let mut divisors = Vec::new();
    let mut floor: Option<f64> = None;
    for (s, level) in levels.iter().enumerate() {
        let stage = solve_homological(&g, &keep, level, cap).map_err(|e| tag_stage(e, s + 1))?;
        h = compose(&h, &stage.h, cap)?;
        g = stage.g;
        divisors.extend(stage.divisors);
        if let Some(x) = stage.divisor_floor {
            floor = Some(floor.map_or(x, |y| y.min(x)));
        }
        keep = keep.union(level.clone());
    }
    let residual = residual(f, &h, &g, cap)?;
    Ok(ConjugationResult {
        h,
        g,
        residual,
        divisor_floor: floor,
        divisors,
        stages: levels.len(),
        cap,
    })
}

/// Low-order normalization: kills every non-resonant coefficient with
/// `2 <= |β| <= top`, keeping resonant ones.
pub fn normalize_low_order<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    top: usize,
    cap: usize,
) -> Result<ConjugationResult<S>> {
    normalize_below(f, top, None, cap)
}

fn normalize_below<S: Scalar>(
    f: &TruncatedSeriesMap<S>,
    top: usize,
    spare: Option<&MultiIndex>,
    cap: usize,
) -> Result<ConjugationResult<S>> {
    let rec = run(f, cap, |alpha| {
        let n = alpha.degree();
        if n <= 1 {
            Role::Keep
        } else if n <= top && !spare.is_some_and(|s| s.le_componentwise(alpha)) {
            Role::Normalize
        } else {
            Role::Free
        }
    })?;
    let residual = residual(f, &rec.h, &rec.g, cap)?;
    Ok(ConjugationResult {
        h: rec.h,
        g: rec.g,
        residual,
        divisor_floor: rec.floor,
        divisors: rec.divisors,
        stages: 1,
        cap,
    })
}

/// Pushes the tail of a perturbed germ to order `lα`: a low-order normalization
/// up to degree `ld + 1` (sparing exponents `>= lα`), then the level partition
/// `A_m = {|β| > ld+1, min β = m-1}`.
pub fn nicer_tail_preset(germ: &GermSpec, cap: usize) -> Result<ConjugationResult> {
    let d = germ.dim();
    let l = germ.l();
    let top = l * d + 1;
    let f = germ.to_series(cap);
    let normal = germ.normal_form_series(cap);
    // Terms already of order `lα` are left alone.
    let l_alpha = MultiIndex::diagonal(d, l as u16);
    let first = normalize_below(&f, top.min(cap), Some(&l_alpha), cap)?;
    for (idx, c) in first.g.iter() {
        if idx.degree() < 2 || idx.degree() > top || l_alpha.le_componentwise(idx) {
            continue;
        }
        for (i, v) in c.iter().enumerate() {
            let scale = v.norm().max(1.0);
            if (v - normal.get(idx, i)).norm() > 1e-12 * scale {
                return Err(Error::ResonantTail {
                    exponent: idx.clone(),
                    component: i,
                });
            }
        }
    }
    let levels: Vec<ExponentSet> = (1..=l as u16 + 1).map(|m| ExponentSet::tail_level(m, l, d)).collect();
    let second = iterated_elimination(&first.g, &ExponentSet::tail_low(l, d), &levels, cap)?;
    let h = compose(&first.h, &second.h, cap)?;
    let residual = residual(&f, &h, &second.g, cap)?;
    let mut divisors = first.divisors;
    divisors.extend(second.divisors);
    let floor = match (first.divisor_floor, second.divisor_floor) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(ConjugationResult {
        h,
        g: second.g,
        residual,
        divisor_floor: floor,
        divisors,
        stages: 1 + second.stages,
        cap,
    })
}

/// Coefficients of `g` differing from the normal form by more than `tol`.
pub fn non_normal_form_terms(g: &TruncatedSeriesMap, germ: &GermSpec, tol: f64) -> Vec<(MultiIndex, usize, Complex64)> {
    let normal = germ.normal_form_series(g.cap());
    let diff = g.sub(&normal);
    let mut out = Vec::new();
    for (idx, c) in diff.iter() {
        for (i, v) in c.iter().enumerate() {
            if v.norm() > tol {
                out.push((idx.clone(), i, *v));
            }
        }
    }
    out
}
