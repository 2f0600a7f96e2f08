use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcl")).args(args).output().expect("binary runs")
}

fn simulate(dir: &TempDir, config: &str, extra: &[&str]) -> (Output, String) {
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("run.csv");
    std::fs::write(&cfg, config).unwrap();
    let mut args = vec!["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = dcl(&args);
    let csv = if out.exists() { std::fs::read_to_string(&out).unwrap() } else { String::new() };
    (o, csv)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut rows = csv.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.map(|r| r.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

const PLATE: &str = r#"
system = "plate-ball"
h = 0.05
steps = 100

[plate]
r = 1.0
omega = 0.0
c = 0.0

[initial]
start = [0.0, 0.0]
end = [0.02, 0.01]
"#;

#[test]
fn plate_ball_run_writes_header_and_rows() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = simulate(&dir, PLATE, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv.lines().count(), 101);
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("step,x0,y0,x1,y1,R11"), "{header}");
    for phi in ["phi_1", "phi_2", "phi_3"] {
        let worst = column(&csv, phi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-10, "{phi}: {worst}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("max DEL residual"), "{stdout}");
}

#[test]
fn floats_use_round_trip_precision() {
    let dir = TempDir::new().unwrap();
    let (_, csv) = simulate(&dir, PLATE, &[]);
    let row = csv.lines().nth(1).unwrap();
    let x1 = row.split(',').nth(3).unwrap();
    assert_eq!(x1, "2.0000000000000000e-2");
}

#[test]
fn single_step_gives_initial_row_only() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = simulate(&dir, &PLATE.replace("steps = 100", "steps = 1"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn missing_step_size_is_reported() {
    let dir = TempDir::new().unwrap();
    let (o, _) = simulate(&dir, &PLATE.replace("h = 0.05", ""), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing parameter: h"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_system_are_rejected() {
    let dir = TempDir::new().unwrap();
    let (o, _) = simulate(&dir, &PLATE.replace("c = 0.0", "c = 0.0\nmass = 2.0"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("plate.mass"), "{}", stderr(&o));
    let (o, _) = simulate(&dir, &PLATE.replace("plate-ball", "rocket"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown system"));
}

#[test]
fn solver_failure_names_the_step() {
    let dir = TempDir::new().unwrap();
    // One Newton iteration is not enough for the rotation update.
    let cfg = PLATE.replace("omega = 0.0", "omega = 0.5").replace("steps = 100", "steps = 5\n[solver]\nmax_iter = 1");
    let (o, _) = simulate(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (_, a) = simulate(&dir, PLATE, &["--seed", "7"]);
    let (_, b) = simulate(&dir, PLATE, &["--seed", "7"]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn time_extended_pendulum_has_time_column() {
    let dir = TempDir::new().unwrap();
    let a0: f64 = 0.3;
    let a1: f64 = 0.35;
    let cfg = format!(
        "system = \"time-extended\"\nh = 0.1\nsteps = 20\n[time]\ninner = \"pair\"\nt0 = 1.0\n[pair]\nexample = \"pendulum\"\n[initial]\nq0 = [{}, {}]\nq1 = [{}, {}]\n",
        a0.sin(),
        -a0.cos(),
        a1.sin(),
        -a1.cos()
    );
    let (o, csv) = simulate(&dir, &cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = column(&csv, "t");
    assert_eq!(t.len(), 20);
    for (k, tk) in t.iter().enumerate() {
        assert!((tk - (1.0 + 0.1 * k as f64)).abs() < 1e-9);
    }
    assert!(csv.lines().next().unwrap().ends_with("residual,energy"));
}

#[test]
fn adaptive_rigid_body_conserves_energy() {
    let dir = TempDir::new().unwrap();
    let cfg = "system = \"time-extended\"\nh = 0.1\nsteps = 30\n[time]\ninner = \"optimal-control\"\nrule = \"adaptive\"\n[control]\ninertia = [1.0, 2.0, 3.0]\n[initial]\nxi = [0.6, -0.5, 0.8]\n";
    let (o, csv) = simulate(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = column(&csv, "energy");
    let drift = e.iter().fold(0.0f64, |m, v| m.max((v - e[0]).abs()));
    assert!(drift < 1e-9, "{drift}");
}

#[test]
fn free_particle_momentum_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = "system = \"pair\"\nh = 0.1\nsteps = 10\n[pair]\nexample = \"free-particle\"\ndim = 2\n[initial]\nq0 = [0.0, 0.0]\nq1 = [0.1, -0.05]\n";
    let (o, csv) = simulate(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (name, v) in [("momentum_1", 1.0), ("momentum_2", -0.5)] {
        for p in column(&csv, name) {
            assert!((p - v).abs() < 1e-10, "{name}: {p}");
        }
    }
}

#[test]
fn check_axioms_passes() {
    let o = dcl(&["check", "axioms", "--seed", "3"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS [axioms]")).count(), 6, "{stdout}");
}

#[test]
fn check_all_passes() {
    let o = dcl(&["check", "all"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    for suite in ["axioms", "regularity", "noether", "variational", "reduction", "identities"] {
        assert!(stdout.contains(&format!("[{suite}]")), "{suite} missing");
    }
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(dcl(&["check", "bogus"]).status.code(), Some(2));
    assert_eq!(dcl(&["check", "axioms", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn missing_config_file() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = dir.path().join("x.csv");
    let o = dcl(&["simulate", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(&out).exists());
}
