use std::f64::consts::{PI, SQRT_2};

use oneres_core::basins::{find_r0, BasinParams};
use oneres_core::cycles::*;
use oneres_core::germs::{make_multipliers, make_normal_form, make_perturbed, AngleScheme, GermSpec};
use oneres_core::orbits::{classify_stable_orbit, OrbitMap, Verdict};
use oneres_core::sampling::Halton;
use oneres_core::{evaluate_series, Complex64, Error, MultiIndex, TruncatedSeriesMap};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn normal(k: usize) -> GermSpec {
    make_normal_form(make_multipliers(2, &AngleScheme::Default, 50).unwrap(), k)
}

fn certified(g: &GermSpec) -> Vec<BasinParams> {
    let cert = find_r0(g, 0.3, 0.4, 1000).unwrap();
    (0..g.k()).map(|h| cert.params(g, h)).collect()
}

#[test]
fn correction_coefficients() {
    let r = make_root_germ(&normal(2), 2).unwrap();
    assert_eq!(r.a, c(-1.0 / 8.0, 0.0));
    assert_eq!(r.b, c(-5.0 / 128.0, 0.0));
    let r1 = make_root_germ(&normal(2), 1).unwrap();
    assert_eq!(r1.a, c(-0.25, 0.0));
    assert_eq!(r1.b, c(0.0, 0.0));
}

#[test]
fn square_root_multipliers() {
    let r = make_root_germ(&normal(2), 2).unwrap();
    let mu = r.mu();
    let expect = [
        Complex64::from_polar(1.0, PI * SQRT_2),
        Complex64::from_polar(1.0, -PI * SQRT_2 + PI),
    ];
    for (a, b) in mu.iter().zip(&expect) {
        assert!((a - b).norm() < 1e-14);
    }
    assert!((mu[0] * mu[1] + 1.0).norm() < 1e-14);
    let (pow, prod) = r.constraint_residuals();
    assert!(pow < 1e-14 && prod < 1e-14, "{pow} {prod}");
}

#[test]
fn divisibility_enforced() {
    assert_eq!(
        make_root_germ(&normal(2), 3).unwrap_err(),
        Error::NotADivisor { p: 3, k: 2 }
    );
    assert!(make_root_germ(&normal(2), 0).is_err());
}

#[test]
fn square_matches_base_through_degree_eleven() {
    let r = make_root_germ(&normal(2), 2).unwrap();
    let rep = verify_root(&r, 100).unwrap();
    assert_eq!(rep.degree, 11);
    assert!(rep.max_deviation < 1e-12, "{}", rep.max_deviation);
    assert_eq!(rep.tail_below_degree, 0.0);
}

#[test]
fn trivial_root_is_exact() {
    for k in 1..=3 {
        let r = make_root_germ(&normal(k), 1).unwrap();
        assert_eq!(verify_root(&r, 100).unwrap().max_deviation, 0.0);
    }
}

/// The intermediate iterates follow `b_m = mb + (m(m-1)/2)a²(kd+1)`; the `/3` variant
/// already fails at `m = 3`.
#[test]
fn intermediate_iterates_follow_the_half_formula() {
    for (k, p) in [(2, 2), (4, 2), (3, 3), (4, 4)] {
        let r = make_root_germ(&normal(k), p).unwrap();
        let rep = verify_root(&r, 100).unwrap();
        assert!(rep.max_deviation < 1e-12, "k={k} p={p}: {}", rep.max_deviation);
        for it in &rep.iterates {
            assert!((it.a_m - it.a_closed).norm() < 1e-14);
            assert!((it.b_m - it.b_closed).norm() < 1e-14, "k={k} m={}", it.m);
        }
        let third = rep.iterates.iter().find(|it| it.m == 3).unwrap();
        let kd1 = (2 * k + 1) as f64;
        let alt = r.b * 3.0 + 2.0 * r.a * r.a * kd1;
        assert!((third.b_m - alt).norm() > 1e-3);
    }
}

#[test]
fn series_power_matches_pointwise_iteration() {
    let r = make_root_germ(&normal(2), 2).unwrap();
    let s = r.series(20);
    let mut worst: f64 = 0.0;
    for x in Halton::new(4).take(100) {
        let z: Vec<Complex64> = (0..2)
            .map(|j| Complex64::from_polar(7e-3 * x[2 * j], 2.0 * PI * x[2 * j + 1]))
            .collect();
        let series_value = evaluate_series(&s, &evaluate_series(&s, &z));
        let point = r.evaluate(&r.evaluate(&z));
        for (a, b) in series_value.iter().zip(&point) {
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn root_of_perturbed_base_reports_low_tail() {
    let mut tail = TruncatedSeriesMap::zero(2, 12);
    tail.add_term(MultiIndex::from_slice(&[6, 4]), 0, c(0.5, 0.0));
    let g = make_perturbed(&normal(2), tail, 10).unwrap();
    let rep = verify_root(&make_root_germ(&g, 2).unwrap(), 100).unwrap();
    assert!(rep.max_deviation < 1e-12);
    assert_eq!(rep.tail_below_degree, 0.5);
}

#[test]
fn square_root_swaps_the_two_basins() {
    let g = normal(2);
    let r = make_root_germ(&g, 2).unwrap();
    let rep = basin_permutation_check(&r, &certified(&g), 1e-2, 1000).unwrap();
    assert_eq!(rep.shift, 1);
    assert_eq!(rep.targets, [Some(1), Some(0)]);
    assert_eq!(rep.samples, [1000, 1000]);
    assert_eq!(rep.min_success(), 1.0);
    assert_eq!(rep.cycles().unwrap(), [vec![0, 1]]);
}

#[test]
fn permutation_cycles_have_length_p() {
    let g = normal(4);
    let b = certified(&g);
    let cases: [(usize, Vec<Vec<usize>>); 3] = [
        (1, vec![vec![0], vec![1], vec![2], vec![3]]),
        (2, vec![vec![0, 2], vec![1, 3]]),
        (4, vec![vec![0, 1, 2, 3]]),
    ];
    for (p, expect) in cases {
        let r = make_root_germ(&g, p).unwrap();
        let rep = basin_permutation_check(&r, &b, 1e-2, 200).unwrap();
        assert_eq!(rep.shift, 4 / p);
        assert_eq!(rep.min_success(), 1.0, "p={p}");
        assert_eq!(rep.cycles().unwrap(), expect);
    }
}

#[test]
fn product_extension_contracts_exactly() {
    let g = normal(1);
    assert!(product_extension(&g, 0).is_err());
    let pg = product_extension(&g, 2).unwrap();
    assert_eq!(pg.dim(), 4);
    assert_eq!(pg.resonant_dim(), 2);
    let w0 = [c(0.3, -0.1), c(-0.07, 0.2)];
    let mut z = vec![c(0.05, 0.01), c(0.04, 0.0), w0[0], w0[1]];
    let mut out = z.clone();
    for n in 1..=200 {
        pg.step(&z, &mut out);
        std::mem::swap(&mut z, &mut out);
        let s = 0.5f64.powi(n);
        assert_eq!(z[2], w0[0] * s);
        assert_eq!(z[3], w0[1] * s);
    }
}

#[test]
fn product_extension_keeps_the_verdict() {
    let g = normal(1);
    let cert = find_r0(&g, 1.5, 0.05, 1000).unwrap();
    let b = [cert.params(&g, 0)];
    let pg = product_extension(&g, 1).unwrap();
    let starts = [
        [c(0.05, 0.01), c(0.06, -0.02)],
        [c(0.1, 0.0), c(0.0, 0.0)],
        [c(-0.06, 0.02), c(0.05, 0.01)],
        [c(0.15, 0.1), c(-0.1, 0.12)],
    ];
    for z in starts {
        let v = classify_stable_orbit(&g, &z, 0.2, 100_000, &b).verdict;
        let zw = [z[0], z[1], c(0.01, 0.01)];
        let vw = classify_stable_orbit(&pg, &zw, 0.2, 100_000, &b).verdict;
        assert_eq!(v, vw);
        assert_ne!(v, Verdict::Undecided);
    }
}
