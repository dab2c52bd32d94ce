use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn quadsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadsim")).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", "scenario.duration = 0.2\nload.0.mass = 3\n");
    let (csv, summary) = (dir.path().join("log.csv"), dir.path().join("summary.txt"));
    let out = quadsim(&["simulate", "--scenario", arg(&cfg), "--mode", "adaptive", "--out", arg(&csv), "--summary", arg(&summary)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(log.lines().count(), 201);
    let kv = std::fs::read_to_string(&summary).unwrap();
    assert!(kv.contains("ticks = 200"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), kv);
}

#[test]
fn duration_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", "scenario.duration = 5\n");
    let out = quadsim(&["simulate", "--scenario", arg(&cfg), "--duration", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("ticks = 100"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_cfg(dir.path(), "bad.cfg", "gait.kind = hover\n");
    let out = quadsim(&["simulate", "--scenario", arg(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(quadsim(&["simulate", "--scenario", arg(&missing)]).status.code(), Some(2));
    let mismatch = write_cfg(dir.path(), "m.cfg", "scenario.dt_ctrl = 0.0011\n");
    assert_eq!(quadsim(&["compare", "--scenario", arg(&mismatch), "--out-dir", arg(dir.path())]).status.code(), Some(2));
}

#[test]
fn divergence_exits_with_three_and_keeps_partial_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "d.cfg", "scenario.duration = 5\ndisturbance.0.t_start = 0.1\ndisturbance.0.t_end = 5\ndisturbance.0.force = 0 0 100000\n");
    let csv = dir.path().join("log.csv");
    let out = quadsim(&["simulate", "--scenario", arg(&cfg), "--out", arg(&csv)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 100);
}

#[test]
fn compare_writes_both_logs_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "c.cfg", "scenario.duration = 0.3\nload.0.mass = 6\n");
    let out_dir = dir.path().join("out");
    let out = quadsim(&["compare", "--scenario", arg(&cfg), "--out-dir", arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["baseline.csv", "adaptive.csv"] {
        assert_eq!(std::fs::read_to_string(out_dir.join(f)).unwrap().lines().count(), 301);
    }
    let kv = std::fs::read_to_string(out_dir.join("comparison.txt")).unwrap();
    assert!(kv.contains("baseline.max_z_error = "));
    assert!(kv.contains("adaptive.fell = "));
}

#[test]
fn lyapunov_prints_residual_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "g.cfg", "");
    let out = quadsim(&["lyapunov", "--gains", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let residual: f64 = text.lines().find_map(|l| l.strip_prefix("residual = ")).unwrap().parse().unwrap();
    let lambda: f64 = text.lines().find_map(|l| l.strip_prefix("lambda = ")).unwrap().parse().unwrap();
    assert!(residual <= 1e-8);
    assert!(lambda > 0.0);
    assert_eq!(text.lines().filter(|l| l.starts_with("P[")).count(), 12);

    let unstable = write_cfg(dir.path(), "u.cfg", "controller.kp = 30 30 0 80 80 80\n");
    assert_eq!(quadsim(&["lyapunov", "--gains", arg(&unstable)]).status.code(), Some(2));
}
