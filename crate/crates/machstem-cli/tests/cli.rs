//! End-to-end runs of the compiled binary: artifact contents, exit codes,
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn machstem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_machstem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config_in.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn euler_demo_defaults_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = machstem(&["euler-demo", "--out", "demo"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("demo/euler_reference.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(report["max_rel_err"].as_f64().unwrap() < 1e-8);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("demo/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "euler-demo");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_resonant_exits_with_resonance_code() {
    let tmp = tempfile::tempdir().unwrap();
    // ubar/cbar = 1/sqrt(3): the squared Mach number (zeta at tau = cbar eta)
    // is exactly 1/3 and the integer phase combination (1, -2, 0) in sorted
    // phase order is singular.
    let ubar = 1.1 / 3f64.sqrt();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"system": {{"kind": "euler", "ubar": {ubar}}}}}"#),
    );
    let out = machstem(&["analyze", "--config", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // The report is still written and lists the hit.
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("res/analyze.json")).unwrap(),
    )
    .unwrap();
    let hits = report["resonant_modes"].as_array().unwrap();
    assert!(!hits.is_empty());
    assert!(hits
        .iter()
        .any(|h| h["alpha"] == serde_json::json!([1, -2, 0])));
}

#[test]
fn solve_periodic_zero_forcing_stays_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"forcing": {"family": "zero"},
            "solver": {"t_final": 0.05, "dt": 0.01,
                       "theta": {"kind": "periodic", "kmax": 8}}}"#,
    );
    let out = machstem(&["solve-periodic", "--config", &cfg, "--out", "zero"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("zero/monitors.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[1..], &[0.0, 0.0, 0.0, 0.0], "{line}");
    }
    // Final snapshot is all zero bytes-as-floats.
    let fields: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("zero/fields.json")).unwrap(),
    )
    .unwrap();
    let last = fields["snapshots"].as_array().unwrap().last().unwrap();
    let bytes =
        std::fs::read(tmp.path().join("zero").join(last["file"].as_str().unwrap())).unwrap();
    assert!(!bytes.is_empty());
    assert!(bytes
        .chunks_exact(8)
        .all(|c| f64::from_le_bytes(c.try_into().unwrap()) == 0.0));
}

#[test]
fn config_errors_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), r#"{"solver": {"dt": -1}}"#);
    let out = machstem(&["analyze", "--config", &bad, "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.dt"));

    let missing = tmp.path().join("nope.json").to_string_lossy().into_owned();
    let out = machstem(&["analyze", "--config", &missing, "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_config_and_seed_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"forcing": {"family": "random_modes", "amplitude": 0.02, "modes": 3},
            "solver": {"t_final": 0.1, "dt": 0.01,
                       "theta": {"kind": "periodic", "kmax": 12}}}"#,
    );
    for dir in ["a", "b"] {
        let out = machstem(
            &["solve-periodic", "--config", &cfg, "--seed", "42", "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names: Vec<String> = std::fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json") // carries the wall time
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".f64")));
    for name in names {
        let a = std::fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    // A different seed changes the trajectory.
    let out = machstem(
        &["solve-periodic", "--config", &cfg, "--seed", "43", "--out", "c"],
        tmp.path(),
    );
    assert!(out.status.success());
    let a = std::fs::read_to_string(tmp.path().join("a/monitors.csv")).unwrap();
    let c = std::fs::read_to_string(tmp.path().join("c/monitors.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn limit_study_threads_match_serial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"sweep": {"theta_periods": [20.0, 40.0]}}"#,
    );
    for (dir, threads) in [("serial", "1"), ("par", "2")] {
        let out = machstem(
            &["limit-study", "--config", &cfg, "--threads", threads, "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("serial/limit_study.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("par/limit_study.csv")).unwrap();
    assert_eq!(a, b);
}
