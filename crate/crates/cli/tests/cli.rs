//! Exit codes, report files and golden handling of the `dbar` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dbar(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbar")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn unknown_suite_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = dbar(&["run", "bogus"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"slices":[{"kind":"disc"}],"colour":"red"}"#).unwrap();
    assert_eq!(code(&dbar(&["run", "kernel-check", "--config", "c.json"], dir.path())), 2);
    assert_eq!(code(&dbar(&["run", "kernel-check", "--config", "missing.json"], dir.path())), 2);
    assert_eq!(code(&dbar(&["run", "kernel-check", "--tol=-1"], dir.path())), 2);
    assert_eq!(code(&dbar(&["run", "kernel-check", "--nr", "1"], dir.path())), 2);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("file"), "").unwrap();
    assert_eq!(code(&dbar(&["run", "kernel-check", "--out", "file/sub"], dir.path())), 3);
}

#[test]
fn spencer_check_writes_zero_exact_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = dbar(&["run", "spencer-check", "--nr", "24", "--ntheta", "48"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["suite"], "spencer-check");
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["runtime_ms"], serde_json::Value::Null);
    assert_eq!(summary["seed"], 42);
    let exact = fs::read_to_string(dir.path().join("out/spencer_exact.csv")).unwrap();
    assert!(exact.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, ["out"], "nothing is written outside the output directory");
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = dbar(&["run", "kernel-check", "--tol", "1e-300"], dir.path());
    assert_eq!(code(&o), 1);
    let summary = fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    assert!(summary.contains("\"pass\": false"));
}

#[test]
fn sharpness_writes_pass_verdict() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dbar(&["run", "sharpness"], dir.path())), 0);
    let v = fs::read_to_string(dir.path().join("out/verdict.json")).unwrap();
    assert!(v.contains("\"verdict\": \"PASS\""));
    let head = fs::read_to_string(dir.path().join("out/sharpness_obstruction.csv")).unwrap();
    assert!(head.starts_with("eps,obstruction_norm_p,a,b,r_squared\n"));
}

#[test]
fn bless_then_drift_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "kernel-check", "--golden", "g", "--degree", "3"];
    let blessed = dbar(&[&args[..], &["--bless"]].concat(), dir.path());
    assert_eq!(code(&blessed), 0);
    assert!(dir.path().join("g/kernel-check/config.json").exists());
    let again = dbar(&args, dir.path());
    assert_eq!(code(&again), 0);
    assert!(String::from_utf8_lossy(&again.stdout).contains("golden: 1 file(s) match"));
    let csv = dir.path().join("g/kernel-check/kernel_check.csv");
    let tampered = fs::read_to_string(&csv).unwrap().replace("disc,100,", "disc,99,");
    fs::write(&csv, tampered).unwrap();
    let drift = dbar(&args, dir.path());
    assert_eq!(code(&drift), 1);
    assert!(String::from_utf8_lossy(&drift.stderr).contains("golden drift"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&dbar(&["run", "kernel-check", "--seed", "7", "--out", out], dir.path())), 0);
    }
    for f in ["kernel_check.csv", "checks.csv", "summary.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}
