use std::collections::HashMap;
use std::sync::OnceLock;

use proptest::prelude::*;

use oneres_core::basins::{find_r0, in_basin, in_t, sample_basin, to_t_chart, BasinParams};
use oneres_core::cycles::{basin_permutation_check, make_root_germ};
use oneres_core::elimination::{sigma_sequence, solve_homological, ExponentSet};
use oneres_core::germs::{make_multipliers, make_normal_form, make_perturbed, AngleScheme, GermSpec};
use oneres_core::{compose, evaluate_series, Complex64, MultiIndex, TruncatedSeriesMap};

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn point(d: usize, r: f64) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(r), d)
}

fn normal(d: usize, k: usize) -> GermSpec {
    make_normal_form(make_multipliers(d, &AngleScheme::Default, 20).unwrap(), k)
}

/// Polynomial map of `C^2` with terms of degree 1..=3.
fn cubic_map() -> impl Strategy<Value = TruncatedSeriesMap> {
    let monomials: Vec<MultiIndex> = (1..=3u16)
        .flat_map(|n| (0..=n).map(move |i| MultiIndex::from_slice(&[i, n - i])))
        .collect();
    let count = monomials.len() * 2;
    prop::collection::vec(complex(0.5), count).prop_map(move |cs| {
        let mut s = TruncatedSeriesMap::zero(2, 12);
        for (i, c) in cs.into_iter().enumerate() {
            s.add_term(monomials[i / 2].clone(), i % 2, c);
        }
        s
    })
}

fn certified(k: usize, theta: f64, beta: f64) -> Vec<BasinParams> {
    type Cache = std::sync::Mutex<HashMap<(usize, u64, u64), Vec<BasinParams>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (k, theta.to_bits(), beta.to_bits());
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
    map.entry(key)
        .or_insert_with(|| {
            let g = normal(2, k);
            let cert = find_r0(&g, theta, beta, 1000).unwrap();
            (0..k).map(|h| cert.params(&g, h)).collect()
        })
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_are_unimodular_with_integer_angle_sum(
        d in 2usize..=6,
        free in prop::collection::vec(0.0f64..1.0, 5),
        explicit in any::<bool>(),
    ) {
        let scheme = if explicit {
            let mut a = free[..d - 1].to_vec();
            a.push(-a.iter().sum::<f64>());
            AngleScheme::Explicit(a)
        } else {
            AngleScheme::Default
        };
        if let Ok(m) = make_multipliers(d, &scheme, 6) {
            for l in m.lambdas() {
                prop_assert!((l.norm() - 1.0).abs() < 1e-15);
            }
            let s: f64 = m.angles().iter().sum();
            prop_assert!((s - s.round()).abs() < 1e-14);
        }
    }

    #[test]
    fn resonant_product_follows_the_normal_form(
        d in 2usize..=4,
        k in 1usize..=3,
        z in point(4, 0.5),
    ) {
        let g = normal(d, k);
        let z = &z[..d];
        let u: Complex64 = z.iter().product();
        let w: Complex64 = g.evaluate(z).iter().product();
        let expect = u * (1.0 - u.powu(k as u32) / (k * d) as f64).powu(d as u32);
        prop_assert!((w - expect).norm() <= 1e-12 * expect.norm().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn coordinate_hyperplanes_rotate(
        d in 2usize..=4,
        k in 1usize..=3,
        j in 0usize..4,
        z in point(4, 0.5),
    ) {
        let g = normal(d, k);
        let mut z = z[..d].to_vec();
        z[j % d] = Complex64::new(0.0, 0.0);
        let w = g.evaluate(&z);
        prop_assert_eq!(w[j % d], Complex64::new(0.0, 0.0));
        for (a, b) in w.iter().zip(&z) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn composition_is_associative(f in cubic_map(), g in cubic_map(), h in cubic_map()) {
        let cap = 6;
        let left = compose(&compose(&f, &g, cap).unwrap(), &h, cap).unwrap();
        let right = compose(&f, &compose(&g, &h, cap).unwrap(), cap).unwrap();
        prop_assert!(left.sub(&right).max_abs(cap) < 1e-10);
    }

    #[test]
    fn composition_matches_pointwise(
        f in cubic_map(),
        g in cubic_map(),
        dir in point(2, 1.0),
    ) {
        let cap = 4;
        let norm = dir.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let z: Vec<Complex64> = dir.iter().map(|x| x * (1e-2 / norm)).collect();
        let fg = compose(&f, &g, cap).unwrap();
        let lhs = evaluate_series(&fg, &z);
        let rhs = evaluate_series(&f.truncated(cap), &evaluate_series(&g, &z));
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn sectors_are_disjoint_and_charts_agree(
        k in 2usize..=3,
        z in point(2, 0.3),
    ) {
        let b = certified(k, 0.2, 0.4);
        let hits = b.iter().filter(|p| in_basin(&z, p).is_in()).count();
        prop_assert!(hits <= 1);
        // `U = u^{-k}` lies near the positive axis for every sector.
        if let Some((big_u, zp)) = to_t_chart(&z, k) {
            prop_assert_eq!(hits == 1, in_t(big_u, &zp, &b[0]).is_in());
        }
    }

    #[test]
    fn drift_stays_near_one_in_the_basin(offset in 0u64..100_000, k in 1usize..=2) {
        let g = normal(2, k);
        let b = certified(k, 0.3, 0.4);
        for p in &b {
            for z in sample_basin(p, 4, offset) {
                let (u0, _) = to_t_chart(&z, k).unwrap();
                let (u1, _) = to_t_chart(&g.evaluate(&z), k).unwrap();
                let step = u1.re - u0.re;
                prop_assert!(step > 0.5 && step < 1.5, "{step}");
            }
        }
    }

    #[test]
    fn root_multipliers_close_both_constraints(
        d in 2usize..=5,
        k in 1usize..=6,
        pick in 0usize..6,
    ) {
        let divisors: Vec<usize> = (1..=k).filter(|p| k % p == 0).collect();
        let p = divisors[pick % divisors.len()];
        let r = make_root_germ(&normal(d, k), p).unwrap();
        let (pow, prod) = r.constraint_residuals();
        prop_assert!(pow < 1e-14 && prod < 1e-14, "{pow} {prod}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn elimination_keeps_and_removes_exactly(tail in prop::collection::vec(complex(0.05), 4)) {
        let base = normal(2, 1);
        let mut t = TruncatedSeriesMap::zero(2, 16);
        let idx = [[6u16, 0], [0, 7], [1, 5], [3, 3]];
        for (i, (e, c)) in idx.iter().zip(tail).enumerate() {
            t.add_term(MultiIndex::from_slice(e), i % 2, c);
        }
        let f = make_perturbed(&base, t, 6).unwrap().to_series(12);
        let a0 = ExponentSet::up_to_degree(5);
        let a = ExponentSet::MinLevel { level: 0, above: 5 };
        let r = solve_homological(&f, &a0, &a, 12).unwrap();
        for (i, v) in r.g.iter() {
            if a0.contains(i) {
                prop_assert_eq!(v, f.coefficient(i).unwrap());
            }
            if a.contains(i) {
                prop_assert!(v.iter().all(|x| x.norm() < 1e-10));
            }
        }
        let fmax = f.max_abs(12);
        let floor = r.divisor_floor.unwrap_or(1.0);
        prop_assert!(r.residual < 1e-9 * fmax / floor);
        let z = [Complex64::new(6e-3, -4e-3), Complex64::new(-5e-3, 5e-3)];
        let lhs = evaluate_series(&r.h, &evaluate_series(&r.g, &z));
        let rhs = evaluate_series(&f, &evaluate_series(&r.h, &z));
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8);
    }
}

/// `σ(t) = t + d σ²/(1 - σ)` coefficientwise, relative to `σ_r`.
#[test]
fn sigma_generating_function_identity() {
    for d in 1..=5 {
        let mut s = vec![0.0];
        s.extend(sigma_sequence(d, 20));
        let n = s.len();
        // `σ^k` as coefficient vectors indexed by degree.
        let mut sum = vec![0.0; n];
        let mut power = s.clone();
        for _ in 2..n {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n - i {
                    next[i + j] += power[i] * s[j];
                }
            }
            power = next;
            for (acc, x) in sum.iter_mut().zip(&power) {
                *acc += x;
            }
        }
        for r in 1..n {
            let rhs = if r == 1 { 1.0 } else { 0.0 } + d as f64 * sum[r];
            if s[r] != 0.0 {
                assert!((s[r] - rhs).abs() <= 1e-10 * s[r].abs(), "d={d} r={r}");
            }
        }
    }
}

/// `h ↦ h + k/p` splits into `k/p` cycles of length `p` for every divisor `p` of `k`.
#[test]
fn permutation_period_equals_p() {
    for k in 1..=6usize {
        let b = certified(k, 0.2, 0.4);
        let g = normal(2, k);
        for p in (1..=k).filter(|p| k % p == 0) {
            let rep = basin_permutation_check(&make_root_germ(&g, p).unwrap(), &b, 1e-2, 100).unwrap();
            assert_eq!(rep.min_success(), 1.0, "k={k} p={p}");
            let cycles = rep.cycles().unwrap();
            assert_eq!(cycles.len(), k / p);
            assert!(cycles.iter().all(|c| c.len() == p));
        }
    }
}
