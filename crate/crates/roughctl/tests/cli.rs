use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn roughctl(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_roughctl"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Second column of the first data row.
fn first_value(csv: &str) -> f64 {
    csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n = 8\nwidth = 3\n").unwrap();
    let o = roughctl(&["pvar", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("width"), "{err}");
}

#[test]
fn malformed_input_exits_two() {
    assert_eq!(code(&roughctl(&["no-such-command"], &[])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&roughctl(&["pvar", "--out", out], &[("ROUGHCTL_N", "many")])), 2);
    assert_eq!(code(&roughctl(&["pvar", "--out", out], &[("ROUGHCTL_WIDTH", "3")])), 2);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.cfg");
    fs::write(
        &cfg,
        "n = 64\nlattice_points = 5\nsteps = 2\nrefined_points = 7\nrefined_steps = 2\nprobe_r = 16\nprobe_x = 0.5\ntol = 1e-9\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = roughctl(&["example", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn pvar_with_unit_exponent_is_total_variation() {
    let dir = tempfile::tempdir().unwrap();
    let vals: [f64; 7] = [0.0, 1.5, -0.5, 0.25, 0.25, 2.0, -1.0];
    let mut csv = String::from("t,v1\n");
    for (i, v) in vals.iter().enumerate() {
        csv.push_str(&format!("{},{v}\n", i as f64 / 6.0));
    }
    let input = dir.path().join("path.csv");
    fs::write(&input, csv).unwrap();
    let out = dir.path().join("out");
    let o = roughctl(&["pvar", "--out", out.to_str().unwrap()], &[("ROUGHCTL_INPUT", input.to_str().unwrap()), ("ROUGHCTL_P", "1")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tv: f64 = vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    assert!((first_value(&read(&out, "pvar.csv")) - tv).abs() < 1e-12);
}

#[test]
fn lift_of_a_csv_path_satisfies_chen() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,v1,v2\n");
    for i in 0..=20 {
        let s = i as f64 / 20.0;
        csv.push_str(&format!("{s},{},{}\n", (6.0 * s).sin(), s * s - 0.3 * (11.0 * s).cos()));
    }
    let input = dir.path().join("path.csv");
    fs::write(&input, csv).unwrap();
    let out = dir.path().join("out");
    let o = roughctl(&["lift", "--out", out.to_str().unwrap()], &[("ROUGHCTL_INPUT", input.to_str().unwrap())]);
    assert_eq!(code(&o), 0);
    let checks = read(&out, "checks.csv");
    let chen = checks.lines().find(|l| l.starts_with("chen")).unwrap();
    let v: f64 = chen.split(',').nth(1).unwrap().parse().unwrap();
    assert!(v <= 1e-10);
    assert!(read(&out, "signature.csv").lines().count() > 7);
}

#[test]
fn reruns_are_bit_identical_and_write_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = roughctl(&["solve-rde", "--seed", "5", "--out", out.to_str().unwrap()], &[("ROUGHCTL_N", "64")]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(read(&a, "trace.csv"), read(&b, "trace.csv"));
    assert_eq!(read(&a, "diagnostics.csv"), read(&b, "diagnostics.csv"));
    let manifest = read(&a, "manifest.txt");
    assert!(manifest.contains("subcommand = solve-rde"));
    assert!(manifest.contains("seed = 5") && manifest.contains("n = 64"), "{manifest}");
    assert!(manifest.starts_with(&format!("tool = roughctl {}", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn small_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "probe_r = 40, 88\nprobe_x = 0.5, 1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = roughctl(&["example", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("PASS relative error within tolerance"));
    assert_eq!(read(&out, "example.csv").lines().count(), 3);
}

#[test]
fn value_prints_a_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = roughctl(&["value", "--out", out.to_str().unwrap()], &[("ROUGHCTL_PROBLEM", "random")]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    for part in ["running", "rough", "penalty", "terminal", "total"] {
        assert!(stdout.contains(part));
    }
    assert!(read(&out, "value.csv").lines().count() == 2);
}
