//! End-to-end runner tests: config parsing, exit codes, report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ternlab")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn theorem25_json() -> &'static str {
    r#"{
        "schema_version": 1,
        "command": "theorem25",
        "algebra": "complex",
        "j": 1,
        "rho": [2.0, 0.0],
        "base": { "terms": [ { "term": "linear", "coeff": [2.0, 1.0] } ] },
        "perturbation": { "s": 0.1, "r": 2.0 },
        "seed": 7,
        "grid": { "count": 32 },
        "formats": ["json", "csv"]
    }"#
}

#[test]
fn theorem25_config_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t25.json", theorem25_json());
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(json.contains("\"verdict\":\"PASS\""));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("index,label,point,lhs,rhs,pass"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t25.json", theorem25_json());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        fs::read(out_a.join("report.json")).unwrap(),
        fs::read(out_b.join("report.json")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("report.csv")).unwrap(),
        fs::read(out_b.join("report.csv")).unwrap()
    );
}

#[test]
fn corollary_exclusion_exits_with_inadmissible_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cor.json",
        r#"{ "schema_version": 1, "command": "corollary", "s": 1.0, "r": 1.0, "j": 1 }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[inadmissible]"), "stderr: {stderr}");
    assert!(stderr.contains("r = 1"), "stderr: {stderr}");
    let marker = fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(marker.contains("INADMISSIBLE"));
}

#[test]
fn axioms_command_passes_on_pointwise_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ax.json",
        r#"{ "schema_version": 1, "command": "axioms", "algebra": "pointwise:4", "seed": 3 }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.json").exists());
    // json-only default: no csv emitted.
    assert!(!out_dir.join("report.csv").exists());
}

#[test]
fn toml_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ax.toml",
        "schema_version = 1\ncommand = \"axioms\"\nalgebra = \"complex\"\nseed = 5\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let out = run(&["--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[config-unreadable]"));
}

#[test]
fn schema_violations_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        r#"{ "schema_version": 9, "command": "corollary", "s": 1.0, "r": 2.0, "j": 1 }"#,
        r#"{ "schema_version": 1, "command": "unknown-command" }"#,
        r#"{ "schema_version": 1 }"#,
        r#"{ not even json"#,
    ] {
        let cfg = write_config(dir.path(), "bad.json", body);
        let out = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3), "body: {body}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("error[config-schema]"),
            "body: {body}"
        );
    }
}

#[test]
fn seed_flag_changes_sampled_points_but_keeps_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t25.json", theorem25_json());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    for (out_dir, seed) in [(&out_a, "99"), (&out_b, "99"), (&out_c, "100")] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(out_a.join("report.json")).unwrap();
    let b = fs::read(out_b.join("report.json")).unwrap();
    let c = fs::read(out_c.join("report.json")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn format_flag_controls_emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cor.json",
        r#"{ "schema_version": 1, "command": "corollary", "s": 0.1, "r": 2.0, "j": 1 }"#,
    );
    let out_dir = dir.path().join("csv-only");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.csv").exists());
    assert!(!out_dir.join("report.json").exists());

    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "yaml",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_directory_is_an_output_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cor.json",
        r#"{ "schema_version": 1, "command": "corollary", "s": 0.1, "r": 2.0, "j": 1 }"#,
    );
    // A regular file where a directory is needed.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, b"not a directory").unwrap();
    let out_dir = blocker.join("sub");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[output-unwritable]"));
}

#[test]
fn extract_over_a_grid_converges_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ext.json",
        r#"{
            "schema_version": 1,
            "command": "extract",
            "algebra": "pointwise:2",
            "j": 1,
            "handle": { "terms": [
                { "term": "linear", "coeff": [1.0, -0.5] },
                { "term": "power_perturbation", "s": 0.05, "r": 3.0, "direction": "seeded:8" }
            ] },
            "grid": { "count": 6 },
            "seed": 12,
            "formats": ["json", "csv"]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(json.contains("\"all_converged\":true"));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("index,label,point,limit,n_steps,converged"));
}

#[test]
fn failing_residual_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // The identity handle has residual 2x, far above the 1e-9 tolerance.
    let cfg = write_config(
        dir.path(),
        "res.json",
        r#"{
            "schema_version": 1,
            "command": "residual",
            "algebra": "complex",
            "j": 1,
            "handle": { "terms": [ { "term": "linear", "coeff": [1.0, 0.0] } ] },
            "grid": { "count": 8 },
            "seed": 2,
            "tol": 1e-9
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
