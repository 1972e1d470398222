use std::path::Path;

use oneres_cli::commands::main_with;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut v = vec!["oneres".to_string(), "--out".into(), out.display().to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    main_with(v)
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--help"]), 0);
    assert_eq!(run(dir.path(), &["--version"]), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]), 2);
    assert_eq!(run(dir.path(), &["plot", "--kind", "spiral"]), 2);
    assert_eq!(run(dir.path(), &["suite", "no-such-suite"]), 2);
    assert_eq!(run(dir.path(), &["--tol", "abel", "germ"]), 2);
    assert_eq!(run(dir.path(), &["--tol", "bogus=1", "germ"]), 2);
}

#[test]
fn theta_at_half_sector_angle_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"basin": {"theta": 1.5707963267948966}}"#);
    assert_eq!(run(dir.path(), &["--config", &cfg, "basin"]), 2);
    let cfg = write_config(dir.path(), r#"{"germ": {"d": 2, "k": 2}, "basin": {"theta": 0.8}}"#);
    assert_eq!(run(dir.path(), &["--config", &cfg, "basin"]), 2);
    let cfg = write_config(dir.path(), r#"{"basin": {"thetta": 0.5}}"#);
    assert_eq!(run(dir.path(), &["--config", &cfg, "germ"]), 2);
}

#[test]
fn suite_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["suite", "elimination"]), 0);
    assert!(dir.path().join("elimination/report.json").exists());
    assert_eq!(
        run(dir.path(), &["--tol", "pointwise=1e-30", "suite", "elimination"]),
        1
    );
    assert_eq!(run(dir.path(), &["suite", "brjuno"]), 1);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), r#"{"orbit": {"n_max": 2000, "stride": 50}}"#);
    for (dir, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        assert_eq!(
            run(
                dir.path(),
                &["--config", &cfg, "--seed", seed, "orbit", "--random", "3"]
            ),
            0
        );
    }
    for name in ["trace-0.csv", "trace-2.csv", "verdicts.json"] {
        let x = std::fs::read(a.path().join("orbit").join(name)).unwrap();
        let y = std::fs::read(b.path().join("orbit").join(name)).unwrap();
        let z = std::fs::read(c.path().join("orbit").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert_ne!(x, z, "{name}");
    }
}

#[test]
fn plot_kinds_have_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"germ": {"d": 2, "k": 2}, "basin": {"theta": 0.6, "beta": 0.2}, "orbit": {"n_max": 5000, "stride": 10}}"#,
    );
    let plot = dir.path().join("plot");
    assert_eq!(run(dir.path(), &["--config", &cfg, "plot", "--kind", "modulus"]), 0);
    assert_eq!(header(&plot.join("modulus.csv")), "r1,r2");
    assert_eq!(run(dir.path(), &["--config", &cfg, "plot", "--kind", "argument"]), 0);
    assert_eq!(header(&plot.join("argument.csv")), "s,t,h");
    assert_eq!(run(dir.path(), &["--config", &cfg, "plot", "--kind", "orbit"]), 0);
    assert_eq!(
        header(&plot.join("orbit.csv")),
        "n,z1_re,z1_im,z2_re,z2_im,abs_u,arg_u,U_re,U_im"
    );
    assert_eq!(run(dir.path(), &["--config", &cfg, "plot", "--kind", "directions"]), 0);
    assert_eq!(header(&plot.join("directions.csv")), "n,arg_z2,arg_sum_deviation");
}

#[test]
fn argument_plot_has_two_ribbons_for_k2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"germ": {"d": 2, "k": 2}, "basin": {"theta": 0.6, "beta": 0.2}}"#,
    );
    assert_eq!(run(dir.path(), &["--config", &cfg, "plot", "--kind", "argument"]), 0);
    let text = std::fs::read_to_string(dir.path().join("plot/argument.csv")).unwrap();
    let mut seen = [false; 2];
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let h = f[2] as usize;
        let center = std::f64::consts::PI * h as f64;
        let dev = (f[0] + f[1] - center).sin().atan2((f[0] + f[1] - center).cos());
        assert!(dev.abs() < 0.6, "{line}");
        seen[h] = true;
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn subcommands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path();
    assert_eq!(run(o, &["germ"]), 0);
    assert!(o.join("germ/germ.json").exists());
    assert_eq!(run(o, &["brjuno"]), 0);
    assert!(o.join("brjuno/brjuno.json").exists());
    assert_eq!(run(o, &["eliminate", "--mode", "nicer-tail"]), 0);
    assert!(o.join("eliminate/report.txt").exists());
    assert_eq!(run(o, &["cycle"]), 2);
    let cfg = write_config(o, r#"{"germ": {"d": 2, "k": 2}, "basin": {"theta": 0.6}}"#);
    assert_eq!(run(o, &["--config", &cfg, "cycle"]), 0);
    assert!(o.join("cycle/permutation.csv").exists());
}
