use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::homological::ConjugationResult;
use crate::index::{indices_in_range, MultiIndex};
use crate::series::TruncatedSeriesMap;

/// `θ = 1/n` with `n = 3`.
pub const THETA: f64 = 1.0 / 3.0;

/// `σ_1 = 1`, `σ_r = d Σ_{k>=2} Σ_{r_1+..+r_k=r} σ_{r_1}..σ_{r_k}`, in floating point.
pub fn sigma_sequence(d: usize, r_max: usize) -> Vec<f64> {
    // c[k][r]: sum over compositions of r into k parts; only the running
    // power and its total over k >= 2 are needed.
    let mut sigma = vec![0.0; r_max + 1];
    if r_max >= 1 {
        sigma[1] = 1.0;
    }
    for r in 2..=r_max {
        // Σ_{k>=2} [t^r] σ^k with σ known below r.
        let mut total = 0.0;
        let mut pow = sigma[..r].to_vec();
        pow.push(0.0);
        for _k in 2..=r {
            let mut next = vec![0.0; r + 1];
            for (a, &pa) in pow.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for b in 1..=r - a {
                    next[a + b] += pa * sigma[b];
                }
            }
            total += next[r];
            pow = next;
        }
        sigma[r] = d as f64 * total;
    }
    sigma.remove(0);
    sigma
}

/// Same recursion in exact integers; `None` once a value overflows.
pub fn sigma_sequence_exact(d: usize, r_max: usize) -> Vec<Option<u128>> {
    let mut sigma: Vec<Option<u128>> = vec![Some(0); r_max + 1];
    if r_max >= 1 {
        sigma[1] = Some(1);
    }
    for r in 2..=r_max {
        let mut total: Option<u128> = Some(0);
        let mut pow: Vec<Option<u128>> = sigma[..r].to_vec();
        pow.push(Some(0));
        for _k in 2..=r {
            let mut next: Vec<Option<u128>> = vec![Some(0); r + 1];
            for a in 0..r {
                for b in 1..=r - a {
                    let term = pow[a].zip(sigma[b]).and_then(|(x, y)| x.checked_mul(y));
                    next[a + b] = next[a + b].zip(term).and_then(|(x, y)| x.checked_add(y));
                }
            }
            total = total.zip(next[r]).and_then(|(x, y)| x.checked_add(y));
            pow = next;
        }
        sigma[r] = total.and_then(|t| t.checked_mul(d as u128));
    }
    sigma.remove(0);
    sigma
}

/// Taylor coefficients `t^1..t^r_max` of `(1 + t - sqrt((1+t)^2 - 4(d+1)t)) / (2(d+1))`.
pub fn sigma_closed_form(d: usize, r_max: usize) -> Vec<f64> {
    let dd = d as f64;
    let p = [1.0, 2.0 - 4.0 * (dd + 1.0), 1.0];
    let mut s = vec![0.0; r_max + 1];
    s[0] = 1.0;
    for n in 1..=r_max {
        let pn = p.get(n).copied().unwrap_or(0.0);
        let conv: f64 = (1..n).map(|i| s[i] * s[n - i]).sum();
        s[n] = (pn - conv) / 2.0;
    }
    (1..=r_max)
        .map(|r| {
            let lin = if r == 1 { 1.0 } else { 0.0 };
            (lin - s[r]) / (2.0 * (dd + 1.0))
        })
        .collect()
}

/// Largest `|[t^n] ((σ - t)(1 - σ) - dσ²)|` for `n <= r_max`, in exact arithmetic.
fn generating_identity_defect(d: usize, sigma: &[Option<u128>]) -> Option<u128> {
    let r_max = sigma.len();
    let s: Vec<i128> = core::iter::once(Some(0))
        .chain(sigma.iter().copied())
        .map(|x| x.and_then(|v| i128::try_from(v).ok()))
        .collect::<Option<_>>()?;
    let mut worst = 0u128;
    for n in 1..=r_max {
        let mut acc: i128 = s[n];
        if n == 1 {
            acc -= 1;
        }
        for i in 1..n {
            let a = if i == 1 { s[1] - 1 } else { s[i] };
            acc = acc.checked_sub(a.checked_mul(s[n - i])?)?;
            acc = acc.checked_sub((d as i128).checked_mul(s[i].checked_mul(s[n - i])?)?)?;
        }
        worst = worst.max(acc.unsigned_abs());
    }
    Some(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountingViolation {
    pub root: MultiIndex,
    pub m: usize,
    pub component: usize,
    pub count: usize,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// Scale `s` with `z = s w` normalizing `‖f_α‖₁ <= 1`.
    pub scale: f64,
    pub indices_checked: usize,
    /// Largest `‖h_α‖₁ / (σ_|α| δ_α)` after rescaling.
    pub max_h_ratio: f64,
    pub h_violations: Vec<MultiIndex>,
    pub counting_checks: usize,
    pub counting_violations: Vec<CountingViolation>,
    /// `max (1/|α|) log δ_α`.
    pub growth_max: f64,
    /// `4d log θ⁻¹ + 4d Σ 2^{-l} log ω⁻¹(2^l)` over the levels within the cap.
    pub growth_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorantReport {
    pub d: usize,
    pub sigma: Vec<f64>,
    pub sigma_exact: Vec<Option<u128>>,
    pub closed_form: Vec<f64>,
    pub max_relative_error: f64,
    /// `None` if the exact values overflowed.
    pub identity_defect: Option<u128>,
    pub bounds: Option<BoundReport>,
}

/// Data for the `h` bounds: the eliminated germ and its conjugation.
pub struct MajorantInput<'a> {
    pub f: &'a TruncatedSeriesMap,
    pub conj: &'a ConjugationResult,
}

pub fn majorant_diagnostics(d: usize, r_max: usize, input: Option<MajorantInput<'_>>) -> MajorantReport {
    let r_max = r_max.max(1);
    let sigma = sigma_sequence(d, r_max);
    let sigma_exact = sigma_sequence_exact(d, r_max);
    let closed_form = sigma_closed_form(d, r_max);
    let max_relative_error = sigma
        .iter()
        .zip(&closed_form)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    let identity_defect = generating_identity_defect(d, &sigma_exact);
    let bounds = input.map(|i| bound_checks(d, &sigma, i));
    MajorantReport {
        d,
        sigma,
        sigma_exact,
        closed_form,
        max_relative_error,
        identity_defect,
        bounds,
    }
}

/// `δ_α` with the maximizing decomposition of each index.
pub struct DeltaTable {
    delta: BTreeMap<MultiIndex, f64>,
    /// First part of the maximizing split of `P(γ)`.
    split: BTreeMap<MultiIndex, MultiIndex>,
    /// Whether `Q(γ) = δ_γ` (no further split).
    q_self: BTreeMap<MultiIndex, bool>,
}

impl DeltaTable {
    pub fn build(d: usize, cap: usize, eps: &BTreeMap<MultiIndex, (f64, usize)>) -> Self {
        let mut delta: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        let mut q: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        let mut split = BTreeMap::new();
        let mut q_self = BTreeMap::new();
        let mut parts: Vec<MultiIndex> = Vec::new();
        for gamma in indices_in_range(d, 1, cap) {
            let mut p = 0.0;
            let mut arg = None;
            for b in &parts {
                if !b.le_componentwise(&gamma) || *b == gamma {
                    continue;
                }
                let rest = gamma.checked_sub(b).expect("b <= gamma");
                let v = delta[b] * q.get(&rest).copied().unwrap_or(0.0);
                if v > p {
                    p = v;
                    arg = Some(b.clone());
                }
            }
            let own = if gamma.degree() == 1 {
                1.0
            } else if let Some(&(e, _)) = eps.get(&gamma) {
                p / e
            } else {
                0.0
            };
            if own > 0.0 {
                delta.insert(gamma.clone(), own);
                parts.push(gamma.clone());
            }
            if let Some(a) = arg {
                split.insert(gamma.clone(), a);
            }
            q_self.insert(gamma.clone(), own >= p && own > 0.0);
            q.insert(gamma, own.max(p));
        }
        Self { delta, split, q_self }
    }

    pub fn delta(&self, a: &MultiIndex) -> f64 {
        self.delta.get(a).copied().unwrap_or(0.0)
    }

    /// Parts `β_1, .., β_k` (k >= 2) of the chosen decomposition of `δ_α`.
    pub fn parts(&self, a: &MultiIndex) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let Some(first) = self.split.get(a) else {
            return out;
        };
        out.push(first.clone());
        let mut rest = a.checked_sub(first).expect("split part");
        loop {
            if self.q_self.get(&rest).copied().unwrap_or(false) {
                out.push(rest);
                break;
            }
            match self.split.get(&rest) {
                Some(b) => {
                    let next = rest.checked_sub(b).expect("split part");
                    out.push(b.clone());
                    rest = next;
                }
                None => break,
            }
        }
        out
    }

    /// All `α_0 = α, α_1, .., α_s` with `|α_l| >= 2` in the full decomposition.
    pub fn nodes(&self, a: &MultiIndex) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut stack = vec![a.clone()];
        while let Some(x) = stack.pop() {
            if x.degree() < 2 {
                continue;
            }
            stack.extend(self.parts(&x));
            out.push(x);
        }
        out
    }
}

fn bound_checks(d: usize, sigma: &[f64], input: MajorantInput<'_>) -> BoundReport {
    let conj = input.conj;
    let cap = conj.cap;
    let eps: BTreeMap<MultiIndex, (f64, usize)> = conj
        .divisors
        .iter()
        .map(|r| (r.index.clone(), (r.epsilon, r.component)))
        .collect();
    let table = DeltaTable::build(d, cap, &eps);

    let mut scale: f64 = 1.0;
    for (idx, c) in input.f.iter() {
        let n = idx.degree();
        if n < 2 {
            continue;
        }
        let norm: f64 = c.iter().map(|v| v.norm()).sum();
        if norm > 1.0 {
            scale = scale.min(norm.powf(-1.0 / (n as f64 - 1.0)));
        }
    }

    // ω_A(m) for m = 0..=cap, with ω(0), ω(1) unused.
    let mut omega = vec![1.0f64; cap + 2];
    for m in 2..=cap + 1 {
        let mut w = omega[m - 1];
        for (idx, &(e, _)) in &eps {
            if idx.degree() == m {
                w = w.min(e);
            }
        }
        omega[m] = w;
    }
    let omega_at = |m: usize| {
        if m <= 1 {
            f64::INFINITY
        } else {
            omega[m.min(cap + 1)]
        }
    };

    let mut max_h_ratio: f64 = 0.0;
    let mut h_violations = Vec::new();
    let mut counting_checks = 0;
    let mut counting_violations = Vec::new();
    let mut growth_max = f64::NEG_INFINITY;
    for alpha in eps.keys() {
        let n = alpha.degree();
        let delta = table.delta(alpha);
        let hn: f64 = (0..d).map(|i| conj.h.get(alpha, i).norm()).sum();
        let scaled = hn * scale.powi(n as i32 - 1);
        let bound = sigma[n - 1] * delta;
        let ratio = if bound > 0.0 { scaled / bound } else { f64::INFINITY };
        if scaled > 0.0 || bound > 0.0 {
            max_h_ratio = max_h_ratio.max(ratio);
        }
        if scaled > bound * (1.0 + 1e-9) {
            h_violations.push(alpha.clone());
        }
        if delta > 0.0 {
            growth_max = growth_max.max(delta.ln() / n as f64);
        }

        let nodes: Vec<(f64, usize)> = table.nodes(alpha).iter().map(|x| eps[x]).collect();
        for m in 1..=n {
            let thr = THETA * omega_at(m);
            let bound = if n <= m { 0.0 } else { 2.0 * n as f64 / m as f64 - 1.0 };
            for j in 0..d {
                let count = nodes.iter().filter(|(e, i)| *i == j && *e < thr).count();
                counting_checks += 1;
                if count as f64 > bound + 1e-12 {
                    counting_violations.push(CountingViolation {
                        root: alpha.clone(),
                        m,
                        component: j,
                        count,
                        bound,
                    });
                }
            }
        }
    }

    let dd = d as f64;
    let mut sum = 0.0;
    let mut l = 1;
    while (1usize << l) <= cap {
        sum += (-omega_at(1 << l).ln()) / f64::from(1u32 << l);
        l += 1;
    }
    let growth_bound = 4.0 * dd * (1.0 / THETA).ln() + 4.0 * dd * sum;

    BoundReport {
        scale,
        indices_checked: eps.len(),
        max_h_ratio,
        h_violations,
        counting_checks,
        counting_violations,
        growth_max,
        growth_bound,
    }
}
