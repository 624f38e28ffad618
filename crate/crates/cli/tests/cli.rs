use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memsact"))
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

/// `key=value` field of a summary line.
fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in `{line}`"))
}

fn csv_column(path: &Path, col: usize) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(col).unwrap().to_string())
        .collect()
}

#[test]
fn pullin_reports_both_serial_ratios() {
    let o = run(&[
        "pullin",
        "--config",
        sample("perturbed.toml").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(field(lines[0], "x_pi"), "0.3333");
    assert_eq!(field(lines[0], "u_pi"), "1.0000");
    assert_eq!(field(lines[1], "x_pi"), "0.4087");
    let x0: f64 = field(lines[0], "x_pi").parse().unwrap();
    let x1: f64 = field(lines[1], "x_pi").parse().unwrap();
    assert!(x1 > x0);
}

#[test]
fn cap_sweep_reference_geometry() {
    let dir = TempDir::new().unwrap();
    // Palmer as the real device, no tabulated override
    let cfg = write_config(
        &dir,
        "geom.toml",
        "[geometry]\nwidth_m = 600e-6\nlength_m = 300e-6\ninitial_gap_m = 305e-6\n",
    );
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "cap-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--points",
        "1000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gap_m,C_ideal_F,C_palmer_F,C_sub_F,C_ser_F"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[4], "inf");
    assert_eq!(csv.lines().count(), 1001);

    let text = stdout(&o);
    let rho: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho_s_bar="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.20..=0.25).contains(&rho), "{rho}");
}

#[test]
fn cap_sweep_with_tabulated_reference() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "cap-sweep",
        "--config",
        sample("reference_device.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--points",
        "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let tab: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho_s_bar_tabulated="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((tab - 0.2278).abs() < 1e-3);
    assert_eq!(csv_column(&out, 3)[0], "1.47400000e-14");
}

#[test]
fn cap_sweep_ideal_column_symmetric_under_side_swap() {
    let dir = TempDir::new().unwrap();
    let a = write_config(
        &dir,
        "a.toml",
        "[geometry]\nwidth_m = 400e-6\nlength_m = 250e-6\n",
    );
    let b = write_config(
        &dir,
        "b.toml",
        "[geometry]\nwidth_m = 250e-6\nlength_m = 400e-6\n",
    );
    let (oa, ob) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (cfg, out) in [(&a, &oa), (&b, &ob)] {
        let o = run(&[
            "cap-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--points",
            "300",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(csv_column(&oa, 1), csv_column(&ob, 1));
}

#[test]
fn simulate_nominal_is_exact() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("trace.csv");
    let o = run(&[
        "simulate",
        "--config",
        sample("nominal.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--setpoint",
        "0.4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(field(&line, "setpoint"), "0.4");
    assert_eq!(field(&line, "status"), "completed");
    let e: f64 = field(&line, "final_error").parse().unwrap();
    assert!(e <= 1e-6);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,x1,x2,x3,u,z1,z2,z3,mu2,mu3,beta\n"));
    assert!(csv.ends_with("# status=completed\n"));
}

#[test]
fn simulate_perturbed_campaign() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("runs");
    let o = run(&[
        "simulate",
        "--config",
        sample("perturbed.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--setpoints",
        "0.8,1.0",
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(field(lines[0], "status"), "completed");
    let e: f64 = field(lines[0], "final_error").parse().unwrap();
    assert!(e <= 0.02);
    assert!(matches!(field(lines[1], "status"), "completed" | "contact"));
    assert!(out.join("trace_sp0.8.csv").is_file());
    assert!(out.join("trace_sp1.csv").is_file());
}

#[test]
fn simulate_output_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&[
            "simulate",
            "--config",
            sample("perturbed.toml").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--setpoint",
            "0.6",
            "--set",
            "simulation.sample_every=10",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn set_point_from_config_and_override() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&[
        "simulate",
        "--config",
        sample("nominal.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "trajectory.y_f=0.25",
        "--set",
        "simulation.t_end=12",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "setpoint"), "0.25");
    let t_last = csv_column(&out, 0).pop().unwrap();
    assert_eq!(t_last, "1.20000000e1");
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("syntax.toml", "[geometry\nwidth_m = 1e-4\n", "line 1"),
        (
            "unknown.toml",
            "[controller]\nk1 = 2.0\nk7 = 1.0\n",
            "line 3",
        ),
        (
            "units.toml",
            "[geometry]\n\ninitial_gap_m = 0.0\n",
            "line 3",
        ),
        (
            "invariant.toml",
            "[controller]\nk1 = 2.0\nk2 = -1.0\n",
            "line 3",
        ),
        ("type.toml", "[simulation]\ndt = \"fast\"\n", "line 2"),
        ("section.toml", "[solver]\ndt = 1e-3\n", "line 1"),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(&dir, name, body);
        let o = run(&["pullin", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_2() {
    let cfg = sample("nominal.toml");
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    let cases: [&[&str]; 6] = [
        &["simulate", "--config", c, "--out", o, "--setpoint", "1.5"],
        &[
            "simulate",
            "--config",
            c,
            "--out",
            o,
            "--set",
            "controller.k1",
        ],
        &[
            "simulate",
            "--config",
            c,
            "--out",
            o,
            "--set",
            "controller.k9=1",
        ],
        &["cap-sweep", "--config", c, "--out", o, "--points", "1"],
        &["cap-sweep", "--config", c, "--out", o, "--gap-max", "1.0"],
        &["frobnicate"],
    ];
    for args in cases {
        let r = run(args);
        assert_eq!(r.status.code(), Some(2), "{args:?}: {}", stderr(&r));
    }
}

#[test]
fn io_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = run(&["pullin", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let unwritable = dir.path().join("no_such_dir").join("x.csv");
    let o = run(&[
        "simulate",
        "--config",
        sample("nominal.toml").to_str().unwrap(),
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&[
        "simulate",
        "--config",
        sample("nominal.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "simulation.initial_x2=1e300",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "status"), "numerical-failure");
    assert!(fs::read_to_string(&out)
        .unwrap()
        .ends_with("# status=numerical-failure\n"));
}
