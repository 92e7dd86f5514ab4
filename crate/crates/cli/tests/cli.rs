//! End-to-end tests of the `epiopt` binary: exit codes, stdout JSON
//! contracts, and bitwise reproducibility of campaign output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epiopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiopt"))
        .args(args)
        .output()
        .expect("failed to launch epiopt")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"))
}

fn write_tiny_covid_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("covid.json");
    fs::write(
        &path,
        r#"{
            "schema_version": 1,
            "mode": "covid",
            "seed": 3,
            "runs": 2,
            "iterations": 40,
            "ci_replicates": 10,
            "crn_probe_pairs": 10,
            "gain": {"a": 0.1, "A": 500, "alpha": 0.501}
        }"#,
    )
    .unwrap();
    path
}

#[test]
fn herd_check_reports_analytic_threshold() {
    let out = epiopt(&["herd-check", "--r0", "1.3"]);
    assert!(out.status.success());
    let json = stdout_json(&out);
    assert_eq!(json["status"], "ok");
    assert_eq!(json["percent"], "23.1%");
    assert!((json["herd_threshold"].as_f64().unwrap() - (1.0 - 1.0 / 1.3)).abs() < 1e-12);
}

#[test]
fn missing_config_exits_1_without_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("results");
    let out = epiopt(&[
        "optimize",
        "--config",
        tmp.path().join("no_such.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    assert!(!out_dir.exists(), "failed run must not leave partial output");
}

#[test]
fn unsupported_schema_version_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("c.json");
    fs::write(&config, r#"{"schema_version": 99, "mode": "covid"}"#).unwrap();
    let out = epiopt(&["evaluate", "--config", config.to_str().unwrap(), "--plan", "1,2,0,1,2,0,1,2,0,1,2,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}

#[test]
fn mode_flag_must_agree_with_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_tiny_covid_config(tmp.path());
    let out = epiopt(&[
        "baselines",
        "--config",
        config.to_str().unwrap(),
        "--mode",
        "h1n1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_is_bitwise_reproducible_for_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_tiny_covid_config(tmp.path());
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let out = epiopt(&[
            "optimize",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let json = stdout_json(&out);
        assert_eq!(json["status"], "ok");
        assert!(json["best_solution"].is_array());
    }
    for name in ["summary.json", "averaged.csv", "trace_000.csv", "trace_001.csv"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identically seeded runs");
    }
}

#[test]
fn seed_override_changes_the_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_tiny_covid_config(tmp.path());
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for (dir, seed) in dirs.iter().zip(["3", "99"]) {
        let out = epiopt(&[
            "optimize",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
    }
    let a = fs::read(dirs[0].join("trace_000.csv")).unwrap();
    let b = fs::read(dirs[1].join("trace_000.csv")).unwrap();
    assert_ne!(a, b, "different master seeds must drive different trajectories");
}

#[test]
fn evaluate_reports_ci_for_an_explicit_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_tiny_covid_config(tmp.path());
    let out = epiopt(&[
        "evaluate",
        "--config",
        config.to_str().unwrap(),
        "--plan",
        "1,30,5,31,45,5,46,55,3,56,60,2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    let ci = &json["ci"];
    assert_eq!(ci["n"], 10);
    assert!(ci["lo"].as_f64().unwrap() <= ci["mean"].as_f64().unwrap());
    assert!(ci["mean"].as_f64().unwrap() <= ci["hi"].as_f64().unwrap());
}

#[test]
fn malformed_plan_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_tiny_covid_config(tmp.path());
    let out = epiopt(&["evaluate", "--config", config.to_str().unwrap(), "--plan", "1,2"]);
    assert_eq!(out.status.code(), Some(1));
}
