use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn frontlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontlab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = frontlab(&[&cfg, "--suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_suite_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "");
    assert_eq!(frontlab(&[&cfg]).status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = frontlab(&["/nonexistent/frontlab.cfg", "--suite", "waves"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_step_is_rejected_before_running() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "numerics.dt = 0.1\n");
    let out = frontlab(&[&cfg, "--suite", "waves"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn malformed_lines_report_their_line_number() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "# header\nseed = 3\nthis is not a pair\n");
    let out = frontlab(&[&cfg, "--suite", "waves"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('3'));
}

#[test]
fn waves_suite_writes_its_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "seed = 7\n");
    let out_dir = dir.path().join("out");
    let out = frontlab(&[&cfg, "--suite", "waves", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("waves: PASS"));
    let echo = fs::read_to_string(out_dir.join("scenario.txt")).unwrap();
    assert!(echo.contains("seed = 7"));
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(report.starts_with("# scenario "));
}
