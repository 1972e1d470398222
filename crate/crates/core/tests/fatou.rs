use std::time::Instant;

use oneres_core::basins::{find_r0, sample_basin, BasinParams};
use oneres_core::fatou::*;
use oneres_core::germs::{make_multipliers, make_normal_form, make_perturbed, AngleScheme, GermSpec};
use oneres_core::{Complex64, MultiIndex, TruncatedSeriesMap};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn normal(k: usize) -> GermSpec {
    make_normal_form(make_multipliers(2, &AngleScheme::Default, 50).unwrap(), k)
}

fn perturbed() -> GermSpec {
    let mut tail = TruncatedSeriesMap::zero(2, 14);
    tail.add_term(MultiIndex::from_slice(&[6, 0]), 0, c(0.01, 0.0));
    tail.add_term(MultiIndex::from_slice(&[3, 3]), 1, c(0.0, 0.02));
    tail.add_term(MultiIndex::from_slice(&[0, 7]), 0, c(0.01, 0.01));
    make_perturbed(&normal(1), tail, 6).unwrap()
}

fn basins(g: &GermSpec, theta: f64, beta: f64) -> Vec<BasinParams> {
    let cert = find_r0(g, theta, beta, 2000).unwrap();
    (0..g.k()).map(|h| cert.params(g, h)).collect()
}

#[test]
fn drift_constants() {
    let k = DriftConstants::new(2);
    assert_eq!(k.c, -0.75);
    assert_eq!(k.e, [5.0 / 16.0, 21.0 / 128.0, 35.0 / 256.0]);
}

/// The truncated expansion satisfies the Abel equation of the exact `U`-dynamics of the
/// normal form up to `O(U^{-5})`.
#[test]
fn drift_expansion_residual_order() {
    for m in 1..=6usize {
        let k = DriftConstants::new(m);
        let mut prev = 0.0;
        for (i, u) in [50.0, 100.0, 200.0].into_iter().enumerate() {
            let big_u = c(u, 0.0);
            let next = big_u * (1.0 - 1.0 / (m as f64 * big_u)).powf(-(m as f64));
            let r = (k.psi_of(next) - k.psi_of(big_u) - 1.0).norm();
            if i > 0 {
                // halving U should shrink the residual by about 2^5
                assert!(prev / r > 20.0, "m={m} ratio {}", prev / r);
            }
            prev = r;
        }
    }
}

#[test]
fn abel_equation_reference_point() {
    let g = normal(1);
    let fc = FatouCoordinates::new(&g, basins(&g, 0.3, 0.4)).unwrap();
    let z = [c(0.01, 0.0), c(0.01, 0.0)];
    let a = fc.psi(&z).unwrap();
    let b = fc.psi(&g.evaluate(&z)).unwrap();
    println!("{a:?}\n{b:?}");
    assert!((b.value - a.value - 1.0).norm() < 1e-8);
    assert!((a.value / 1e4 - 1.0).norm() < 0.01);
}

/// `ψ(F z)` is evaluated with a longer window so the two sides stop at unrelated depths.
fn abel_sweep(g: &GermSpec, b: Vec<BasinParams>, n: usize) -> f64 {
    let fc = FatouCoordinates::new(g, b.clone()).unwrap();
    let opts = FatouOptions {
        window: 80,
        ..Default::default()
    };
    let fc2 = FatouCoordinates::new(g, b.clone()).unwrap().with_options(opts);
    let mut worst: f64 = 0.0;
    for p in &b {
        for z in sample_basin(p, n, 3) {
            let a = fc.evaluate(&z).unwrap();
            let w = g.evaluate(&z);
            let b = fc2.evaluate(&w).unwrap();
            assert!(a.psi.value.re > 0.0);
            worst = worst.max((b.psi.value - a.psi.value - 1.0).norm());
            let m = g.m() as f64;
            let lhs = b.sigma(1, g.m());
            let rhs = g.multipliers().lambda(1) * a.sigma(1, g.m()) * (a.psi.value / (a.psi.value + 1.0)).powf(1.0 / m);
            worst = worst.max((lhs - rhs).norm());
            worst = worst.max((b.tau[0].value - g.multipliers().lambda(1) * a.tau[0].value).norm());
            let s1a = fc.sigma_one_of(&a);
            let s1b = fc.sigma_one_of(&b);
            let rhs = g.multipliers().lambda(0) * s1a * (a.psi.value / (a.psi.value + 1.0)).powf(1.0 / m);
            worst = worst.max((s1b - rhs).norm());
        }
    }
    worst
}

#[test]
fn functional_equations_on_samples() {
    let t = Instant::now();
    for k in 1..=2 {
        let g = normal(k);
        let w = abel_sweep(&g, basins(&g, 0.3, 0.4), 100);
        println!("k={k} worst {w:e}");
        assert!(w < 1e-7);
    }
    let g = perturbed();
    let b: Vec<BasinParams> = basins(&g, 0.3, 0.45).iter().map(tightened).collect();
    let w = abel_sweep(&g, b, 100);
    println!("perturbed worst {w:e} in {:?}", t.elapsed());
    assert!(w < 1e-6);
}

#[test]
fn tau_modulus_identity_and_orbit_constancy() {
    let g = normal(1);
    let fc = FatouCoordinates::new(&g, basins(&g, 0.3, 0.4)).unwrap();
    let z = [c(0.03, 0.01), c(0.04, -0.01)];
    let p = fc.evaluate(&z).unwrap();
    let s = p.sigma(1, 2);
    assert!((p.tau[0].value.norm() - p.psi.value.norm().sqrt() * s.norm()).abs() < 1e-12);
    let mut zn = z.to_vec();
    for n in 1..=1000i64 {
        zn = g.evaluate(&zn);
        if n % 100 == 0 {
            let q = fc.evaluate(&zn).unwrap();
            let v = g.multipliers().lambda_power(1, -n) * q.tau[0].value;
            assert!((v - p.tau[0].value).norm() < 1e-6);
        }
    }
}

#[test]
fn sigma_approaches_coordinate() {
    let g = normal(1);
    let fc = FatouCoordinates::new(&g, basins(&g, 0.3, 0.4)).unwrap();
    let mut pts = Vec::new();
    for e in [2.0, 2.5, 3.0, 3.5, 4.0] {
        let r = 10f64.powf(-e);
        let s = fc.sigma(&[c(r, 0.0), c(r, 0.0)], 1).unwrap().value;
        pts.push((r.ln(), ((s - r).norm()).ln()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("slope {slope}");
    // |σ - z| = O(|u|^α) = O(r^{2α}) with 2α > 2(1 - β) = 1.2.
    assert!(slope > 1.2);
}

#[test]
fn cylinder_conjugation_identities() {
    let m = make_multipliers(2, &AngleScheme::Default, 50).unwrap();
    let p = CylinderPoint {
        zeta: c(0.0, 0.0),
        xi: vec![c(0.3, 0.2)],
    };
    assert_eq!(cylinder_conjugation(&p, &m, Direction::Forward).unwrap(), p);
    let p1 = CylinderPoint {
        zeta: c(1.0, 0.0),
        xi: vec![c(0.3, 0.2)],
    };
    let q = cylinder_conjugation(&p1, &m, Direction::Forward).unwrap();
    assert!((q.xi[0] - c(0.3, 0.2) / m.lambda(1)).norm() < 1e-15);
    let z = CylinderPoint {
        zeta: c(2.7, -0.4),
        xi: vec![c(-0.1, 0.5)],
    };
    let moved = CylinderPoint {
        zeta: z.zeta + 1.0,
        xi: vec![m.lambda(1) * z.xi[0]],
    };
    let a = cylinder_conjugation(&moved, &m, Direction::Forward).unwrap();
    let b = cylinder_conjugation(&z, &m, Direction::Forward).unwrap();
    assert!((a.xi[0] - b.xi[0]).norm() < 1e-12);
    let back = cylinder_conjugation(&b, &m, Direction::Backward).unwrap();
    assert!((back.xi[0] - z.xi[0]).norm() < 1e-15);
    let bad = CylinderPoint {
        zeta: c(1.0, 0.0),
        xi: vec![c(0.0, 0.0)],
    };
    assert!(cylinder_conjugation(&bad, &m, Direction::Forward).is_err());
}

#[test]
fn global_coordinate_is_well_defined_and_conjugates() {
    let g = normal(1);
    let fc = FatouCoordinates::new(&g, basins(&g, 0.3, 0.4)).unwrap();
    let m = g.multipliers();
    // Starts outside B_0 (domination fails) and enters after a few steps.
    let z = [c(0.2, 0.05), c(0.04, 0.0)];
    assert!(fc.sector_of(&z).is_none());
    let (p, n) = fc.global_coordinate(&z, 10_000).unwrap();
    println!("entry {n}");
    let q = fc.global_coordinate_at(&z, n + 5).unwrap();
    assert!((p.zeta - q.zeta).norm() < 1e-6 && (p.xi[0] - q.xi[0]).norm() < 1e-6);
    let (pf, _) = fc.global_coordinate(&g.evaluate(&z), 10_000).unwrap();
    let a = cylinder_conjugation(&pf, m, Direction::Forward).unwrap();
    let b = cylinder_conjugation(&p, m, Direction::Forward).unwrap();
    assert!((a.zeta - b.zeta - 1.0).norm() < 1e-6);
    // η scales ξ by e^{2π|t| Im ζ}, so ξ is compared relatively.
    assert!((a.xi[0] - b.xi[0]).norm() < 1e-6 * b.xi[0].norm());
    let inside = [c(0.01, 0.0), c(0.01, 0.0)];
    let (p0, n0) = fc.global_coordinate(&inside, 10).unwrap();
    assert_eq!(n0, 0);
    let e = fc.evaluate(&inside).unwrap();
    assert_eq!(p0.zeta, e.psi.value);
    assert!(fc.global_coordinate(&[c(0.05, 0.0), c(-0.05, 0.0)], 10).is_err());
}

#[test]
fn injectivity_diagnostics() {
    let g = normal(1);
    let b = basins(&g, 0.3, 0.4);
    let fc = FatouCoordinates::new(&g, b.clone()).unwrap();
    let target = BasinParams {
        r: 4.0 * b[0].r,
        theta: 0.15,
        beta: 0.45,
        ..b[0]
    };
    let rep = check_injectivity(&fc, &b[0], 300, &[1e-2, 1e-3], &target, 5).unwrap();
    println!("{:?} {:?}", rep.min_normalized_distance, rep.jacobians);
    assert!(rep.min_normalized_distance > 1e-6);
    let j = rep.jacobians.iter().find(|j| j.r == 1e-3).unwrap();
    assert!((j.det - 1.0).norm() < 0.1);
    for s in &rep.containment {
        println!("{} {} {}", s.residual, s.iterations, s.in_basin);
        assert!(s.solution.is_some() && s.in_basin);
    }
}

#[test]
fn point_outside_basin_is_rejected() {
    let g = normal(1);
    let fc = FatouCoordinates::new(&g, basins(&g, 0.3, 0.4)).unwrap();
    assert_eq!(
        fc.psi(&[c(0.05, 0.0), c(-0.05, 0.0)]),
        Err(oneres_core::Error::NotInBasin)
    );
}

/// `ψ = U + c log U + O(U^{-1})` on the basin, with the error shrinking as `Re U` grows.
#[test]
fn psi_expansion_error_is_order_inverse_u() {
    let g = perturbed();
    let b: Vec<BasinParams> = basins(&g, 0.3, 0.45).iter().map(tightened).collect();
    let fc = FatouCoordinates::new(&g, b.clone()).unwrap();
    let cst = g.drift_constant();
    let mut rows = Vec::new();
    for z in sample_basin(&b[0], 200, 11) {
        let p = fc.evaluate(&z).unwrap();
        assert!(p.psi.branch.min_re > 0.0);
        let u: Complex64 = z.iter().product();
        let big_u = 1.0 / u;
        let err = (p.psi.value - big_u - cst * big_u.ln()).norm();
        rows.push((big_u.re, err, err * big_u.norm()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scaled = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let half = rows.len() / 2;
    let low = rows[..half].iter().map(|r| r.1).fold(0.0, f64::max);
    let high = rows[half..].iter().map(|r| r.1).fold(0.0, f64::max);
    println!("max U*err {scaled}, low {low:e} high {high:e}");
    assert!(scaled < 1.0);
    assert!(high < low);
}

/// Along an orbit `|σ_{n+1} - σ_n| <= C |u_n|^α` with a fitted `α > 1 - β`.
#[test]
fn sigma_increments_decay_faster_than_u() {
    let g = perturbed();
    let consts = DriftConstants::new(g.m());
    let m = g.m() as f64;
    let mut orbit = g.rotating_orbit(&[c(0.05, 0.01), c(0.04, -0.01)]);
    let mut prev: Option<Complex64> = None;
    let mut pts = Vec::new();
    for n in 0..200_000u64 {
        let w = orbit.point();
        let u: Complex64 = w.iter().product();
        let big_u = 1.0 / u;
        let psi = consts.psi_of(big_u) - n as f64;
        let sigma = w[1] * big_u.powf(1.0 / m) / psi.powf(1.0 / m);
        if let Some(s) = prev {
            if n % 1000 == 0 {
                pts.push((u.norm().ln(), (sigma - s).norm().ln()));
            }
        }
        prev = Some(sigma);
        orbit.advance();
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("alpha {slope}");
    assert!(slope > 1.0 - 0.45);
}
