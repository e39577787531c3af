//! Integration tests for the command-line surface: exit codes, config
//! echoes that reproduce runs, and the simulate -> file -> estimate round
//! trip against the in-process pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn obcs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obcs"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_config_exits_one_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = obcs(&["sweep", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("missing.json"), "diagnostic was: {err}");
    assert_eq!(err.lines().count(), 1, "single-line diagnostic expected");
}

#[test]
fn lambda_prints_the_noiseless_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out = obcs(&["lambda", "--model", "noiseless"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_str(&out).trim(), "0.7978845608");
}

#[test]
fn lambda_empirical_matches_analytic_loosely() {
    let dir = tempfile::tempdir().unwrap();
    let out = obcs(
        &["lambda", "--model", "bitflip", "--p", "0.75", "--empirical-m", "200000", "--seed", "3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    let analytic: f64 = lines.next().unwrap().trim().parse().unwrap();
    let emp_line = lines.next().unwrap();
    let emp: f64 = emp_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((analytic - emp).abs() < 0.01, "analytic {analytic} vs empirical {emp}");
}

#[test]
fn simulate_estimate_round_trip_matches_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let record_path = dir.path().join("run.bin");
    let out = obcs(
        &[
            "simulate", "--n", "80", "--s", "4", "--model", "prequant", "--sigma", "1.0",
            "--m", "600", "--seed", "99", "--output", record_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));

    let est = obcs(
        &[
            "estimate", "--record", record_path.to_str().unwrap(),
            "--constraint", "sparse", "--s", "4",
        ],
        dir.path(),
    );
    assert_eq!(est.status.code(), Some(0), "stderr: {}", stderr_str(&est));
    let cli_report = stdout_str(&est);

    // The same pipeline through the library, serialized identically.
    let rec = obcs::record::read_file(&record_path).unwrap();
    let report = obcs::estimate(
        &rec,
        &obcs::ConstraintSet::SparseBall { n: rec.n(), s: 4.0 },
        None,
    )
    .unwrap();
    let lib_report = serde_json::to_string_pretty(&report).unwrap();
    assert_eq!(cli_report.trim(), lib_report.trim());

    // Feasibility of the reported estimate.
    let parsed: serde_json::Value = serde_json::from_str(cli_report.trim()).unwrap();
    let x_hat: Vec<f64> = parsed["x_hat"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let l2: f64 = x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let l1: f64 = x_hat.iter().map(|v| v.abs()).sum();
    assert!(l2 <= 1.0 + 1e-8);
    assert!(l1 <= 2.0 + 1e-8);
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_cfg = dir.path().join("sweep.json");
    std::fs::write(
        &sweep_cfg,
        r#"{
            "sweep": {
                "n": 32,
                "constraint": {"kind": "sparse", "s": 3.0},
                "model": {"kind": "bit-flip", "p": 0.9},
                "m_grid": [60, 120],
                "trials": 3,
                "base_seed": 5,
                "width_samples": 50
            },
            "output": "out.csv"
        }"#,
    )
    .unwrap();
    let first = obcs(&["sweep", "--config", "sweep.json"], dir.path());
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_str(&first));
    let first_csv = std::fs::read(dir.path().join("out.csv")).unwrap();

    // The stderr echo is itself a valid config; rerunning from it must give
    // byte-identical output.
    let echo = stderr_str(&first);
    std::fs::write(dir.path().join("echo.json"), &echo).unwrap();
    std::fs::write(dir.path().join("out.csv"), b"clobbered").unwrap();
    let second = obcs(&["sweep", "--config", "echo.json"], dir.path());
    assert_eq!(second.status.code(), Some(0), "stderr: {}", stderr_str(&second));
    let second_csv = std::fs::read(dir.path().join("out.csv")).unwrap();
    assert_eq!(first_csv, second_csv);

    // Worker count must not affect bytes either.
    let par = obcs(
        &["sweep", "--config", "echo.json", "--workers", "4", "--output", "out4.csv"],
        dir.path(),
    );
    assert_eq!(par.status.code(), Some(0));
    let par_csv = std::fs::read(dir.path().join("out4.csv")).unwrap();
    assert_eq!(first_csv, par_csv);
}

#[test]
fn sweep_json_format_writes_rows_and_metadata_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.json"),
        r#"{
            "sweep": {
                "n": 16,
                "constraint": {"kind": "sparse", "s": 2.0},
                "model": {"kind": "noiseless"},
                "m_grid": [40],
                "trials": 2,
                "base_seed": 8,
                "width_samples": 30
            },
            "output": "rows.json",
            "format": "json"
        }"#,
    )
    .unwrap();
    let out = obcs(&["sweep", "--config", "sweep.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rows.json")).unwrap())
            .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("rows.json.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["config"]["n"], 16);
    assert!(meta["version"].is_string());
    assert!(meta["git_hash"].is_string());
}

#[test]
fn estimate_rejects_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let record_path = dir.path().join("run.bin");
    let out = obcs(
        &[
            "simulate", "--n", "10", "--s", "2", "--model", "noiseless",
            "--m", "50", "--seed", "1", "--output", record_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let est = obcs(
        &[
            "estimate", "--record", record_path.to_str().unwrap(),
            "--constraint", "lowrank", "--r", "1", "--n1", "4", "--n2", "4",
        ],
        dir.path(),
    );
    assert_eq!(est.status.code(), Some(1));
    assert!(stderr_str(&est).contains("dimension"));
}

#[test]
fn corrupted_record_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.bin"), b"OBCS1 not really a record").unwrap();
    let est = obcs(
        &["estimate", "--record", "junk.bin", "--constraint", "sparse", "--s", "2"],
        dir.path(),
    );
    assert_eq!(est.status.code(), Some(1));
}

#[test]
fn meanwidth_and_tessellate_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    let mw = obcs(
        &["meanwidth", "--family", "ball", "--n", "50", "--samples", "200", "--seed", "2"],
        dir.path(),
    );
    assert_eq!(mw.status.code(), Some(0));
    let est: serde_json::Value = serde_json::from_str(stdout_str(&mw).trim()).unwrap();
    assert!(est["w_hat"].as_f64().unwrap() > 0.0);
    assert!(est.get("width_sq_over_s_log_ratio").is_none());

    let mw_sparse = obcs(
        &[
            "meanwidth", "--family", "exact-sparse", "--n", "64", "--s", "4",
            "--samples", "300", "--seed", "2",
        ],
        dir.path(),
    );
    assert_eq!(mw_sparse.status.code(), Some(0));
    let est: serde_json::Value = serde_json::from_str(stdout_str(&mw_sparse).trim()).unwrap();
    assert!(est["width_sq_over_s_log_ratio"].as_f64().unwrap() > 0.0);

    let tess = obcs(
        &[
            "tessellate", "--n", "16", "--s", "2", "--m", "2000",
            "--pairs", "10", "--embedding-samples", "5", "--seed", "3",
        ],
        dir.path(),
    );
    assert_eq!(tess.status.code(), Some(0));
    let audit: serde_json::Value = serde_json::from_str(stdout_str(&tess).trim()).unwrap();
    assert!(audit["tessellation"]["max_abs_deviation"].as_f64().unwrap() <= 1.0);
    assert!(audit["l1_embedding_max_deviation"].as_f64().unwrap() >= 0.0);
}
