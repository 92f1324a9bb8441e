//! End-to-end tests of the qma binary: artifacts, exit codes,
//! round-trip and reproducibility guarantees.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qma_core::GridFunction;

fn qma() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qma"))
}

fn finish(mut cmd: Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ball_config(points: usize, tol: f64, max_iter: usize) -> String {
    format!(
        r#"{{
  "n": 1,
  "domain": "ball",
  "radius": 1.0,
  "points_per_axis": {points},
  "f": "8",
  "g": "normq",
  "exact": "normq",
  "tol": {tol},
  "max_iter": {max_iter},
  "init": "constant_min",
  "seed": 7
}}"#
    )
}

fn run_solve(cfg: &Path, out_dir: &Path, extra: &[&str]) -> Output {
    let mut cmd = qma();
    cmd.arg("--config").arg(cfg).arg("--output-dir").arg(out_dir);
    cmd.args(extra);
    cmd.arg("solve");
    finish(cmd)
}

#[test]
fn solve_writes_artifacts_round_trips_and_reruns_from_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-7, 20_000)).unwrap();

    let out_a = dir.path().join("a");
    let out = run_solve(&cfg, &out_a, &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    assert!(report["residual"].as_f64().unwrap() <= 1e-7);
    assert!(report["linf_error"].as_f64().unwrap() <= 1e-4);
    assert!(!report["residual_history"].as_array().unwrap().is_empty());
    assert!(report["iterations"].as_u64().unwrap() > 0);
    assert_eq!(report["config_echo"]["f"].as_str(), Some("8"));

    // grid CSV round trip is bit exact
    let text = fs::read_to_string(out_a.join("solution.csv")).unwrap();
    let grid = GridFunction::from_csv_string(&text).unwrap();
    assert_eq!(grid.to_csv_string(), text);

    // the echoed config reproduces the run byte for byte, regardless
    // of the worker thread count
    let cfg2 = dir.path().join("echo.json");
    fs::write(&cfg2, serde_json::to_string(&report["config_echo"]).unwrap()).unwrap();
    let out_b = dir.path().join("b");
    let out2 = run_solve(&cfg2, &out_b, &["--threads", "2"]);
    assert!(out2.status.success(), "stderr: {}", stderr(&out2));
    assert_eq!(
        fs::read(out_a.join("solution.csv")).unwrap(),
        fs::read(out_b.join("solution.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("report.json")).unwrap(),
        fs::read(out_b.join("report.json")).unwrap()
    );
}

#[test]
fn solve_exits_2_when_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-12, 3)).unwrap();
    let out_dir = dir.path().join("out");

    let out = run_solve(&cfg, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("convergence"), "stderr: {}", stderr(&out));

    // artifacts are still written for inspection
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(false));
    assert!(out_dir.join("solution.csv").exists());
}

#[test]
fn solve_without_config_is_a_config_error() {
    let mut cmd = qma();
    cmd.arg("solve");
    let out = finish(cmd);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn moore_det_identity_prints_one_from_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id3.txt");
    let mut text = String::from("3\n");
    for j in 0..3 {
        for k in 0..3 {
            let re = if j == k { 1.0 } else { 0.0 };
            text += &format!("{j} {k} {re} 0 0 0\n");
        }
    }
    fs::write(&path, text).unwrap();

    let mut cmd = qma();
    cmd.arg("moore-det").arg(&path);
    let out = finish(cmd);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let vals: Vec<f64> = stdout(&out)
        .lines()
        .filter(|l| l.starts_with("moore-det"))
        .map(|l| l.rsplit(':').next().unwrap().trim().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 2, "stdout: {}", stdout(&out));
    for v in vals {
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}

#[test]
fn moore_det_rejects_malformed_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "2\n0 0 1 0 0 0\n").unwrap();
    let mut cmd = qma();
    cmd.arg("moore-det").arg(&path);
    let out = finish(cmd);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-6, 100)).unwrap();
    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("validate");
    let out = finish(cmd);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("config ok"));
}

#[test]
fn validate_rejects_negative_rhs_citing_nonnegativity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-6, 100).replace("\"f\": \"8\"", "\"f\": \"-1\"")).unwrap();
    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("validate");
    let out = finish(cmd);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nonnegativ"), "stderr: {}", stderr(&out));
}

#[test]
fn validate_reports_parse_errors_with_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-6, 100).replace("\"g\": \"normq\"", "\"g\": \"8 +\"")).unwrap();
    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("validate");
    let out = finish(cmd);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("column 4"), "stderr: {}", stderr(&out));
}

#[test]
fn psh_check_reports_verdicts_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(5, 1e-6, 100)).unwrap();

    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("psh-check").arg("normq").args(["--samples", "40"]);
    let out = finish(cmd);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verdict: plurisubharmonic"), "stdout: {}", stdout(&out));

    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("psh-check").arg("x0*x0 - 3*x1*x1").args(["--samples", "40"]);
    let out = finish(cmd);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let s = stdout(&out);
    assert!(s.contains("not plurisubharmonic"), "stdout: {s}");
    assert!(s.contains("witness"), "stdout: {s}");
}

#[test]
fn convolve_writes_an_ordered_triple_of_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, ball_config(7, 1e-6, 100)).unwrap();
    let out_dir = dir.path().join("out");

    let mut cmd = qma();
    cmd.arg("--config").arg(&cfg).arg("--output-dir").arg(&out_dir);
    cmd.arg("convolve").arg("normq").args(["--delta", "0.2", "--a-const", "2.0"]);
    let out = finish(cmd);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let sup = GridFunction::read_csv(&out_dir.join("sup_convolution.csv")).unwrap();
    let inf = GridFunction::read_csv(&out_dir.join("inf_convolution.csv")).unwrap();
    let mut compared = 0usize;
    for idx in 0..sup.len() {
        if !(sup.mask(idx).in_domain() && inf.mask(idx).in_domain()) {
            continue;
        }
        let q2: f64 = sup.coords(idx).iter().map(|v| v * v).sum();
        assert!(sup.value(idx) >= q2 - 1e-12);
        assert!(inf.value(idx) <= q2 + 1e-12);
        assert!(sup.value(idx) >= inf.value(idx) - 1e-12);
        compared += 1;
    }
    assert!(compared > 0);
}

#[test]
fn properties_pass_and_are_seed_deterministic() {
    let mut cmd = qma();
    cmd.args(["--seed", "11", "properties"]);
    let first = finish(cmd);
    assert!(first.status.success(), "stderr: {}", stderr(&first));
    let s1 = stdout(&first);
    assert!(s1.contains("PASS"), "stdout: {s1}");
    assert!(!s1.contains("FAIL"), "stdout: {s1}");

    let mut cmd = qma();
    cmd.args(["--seed", "11", "properties"]);
    let second = finish(cmd);
    assert_eq!(s1, stdout(&second));
}
