use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn capflu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capflu")).args(args).output().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/small/run.cfg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(capflu(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(capflu(&[]).status.code(), Some(2));
    assert_eq!(capflu(&["replay", "--bogus"]).status.code(), Some(2));
}

#[test]
fn invalid_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "forecasts = f.csv\ntruth = t.csv\nseasons = 2016\nwibble = 3\n").unwrap();
    let out = dir.path().join("run");
    let o = capflu(&["replay", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wibble"));
    assert!(!out.exists());
}

#[test]
fn report_without_artifacts_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(capflu(&["report", "--out", dir.path().to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("nope");
    assert_eq!(capflu(&["phi-trace", "--out", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn restarts_emit_one_row_each() {
    let o = capflu(&["diagnose", "restarts", "--n", "100", "--seed", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0], "restart,init_1,init_2,weight_1,weight_2,log_likelihood,iterations,converged");
    assert_eq!(stdout(&capflu(&["diagnose", "restarts", "--n", "100", "--seed", "7"])), text);
    assert_eq!(capflu(&["diagnose", "restarts", "--demo", "quadruple"]).status.code(), Some(2));
}

#[test]
fn variance_kl_curve_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = capflu(&["diagnose", "variance-kl", "--mean-a", "2", "--from", "2", "--to", "3", "--step", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(out).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(text.lines().count(), 4);
    assert!((last[1] - 3.0).abs() < 1e-12 && (last[2] - 0.5).abs() < 1e-12 && (last[4] - 1.25).abs() < 1e-12);
}

#[test]
fn surface_covers_the_simplex() {
    let o = capflu(&["diagnose", "surface", "--steps", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 15);
}

#[test]
fn ingest_replay_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture();
    let cfg = cfg.to_str().unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();

    let ingest = dir.path().join("ingested");
    let o = capflu(&["ingest", "--config", cfg, "--out", ingest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(ingest.join("panel/season-2016.csv").is_file() && ingest.join("panel/truth.csv").is_file());

    let o = capflu(&["replay", "--config", cfg, "--out", run_s, "--stop-after", "201650"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = capflu(&["replay", "--config", cfg, "--out", run_s]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("reused"));
    let o = capflu(&["replay", "--config", cfg, "--out", run_s, "--seed", "99"]);
    assert_eq!(o.status.code(), Some(1));

    let o = capflu(&["report", "--out", run_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout(&o);
    assert_eq!(summary.lines().count(), 1 + 5 * 3);
    assert!(run.join("reports/summary.csv").is_file() && run.join("reports/trajectory.csv").is_file());

    let o = capflu(&["phi-trace", "--out", run_s]);
    assert!(o.status.success());
    let trace = stdout(&o);
    assert!(trace.starts_with("variant,season,week,phi,"));
    assert!(trace.lines().skip(1).all(|l| l.starts_with("cap-")));

    let o = capflu(&["diagnose", "kl", "--config", cfg]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}
