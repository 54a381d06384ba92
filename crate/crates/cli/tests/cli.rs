//! End-to-end tests of the `sdelap` binary: flag parsing, output formats,
//! exit codes, and the config round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn sdelap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdelap")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn laplace_reports_cameron_martin() {
    let out = sdelap(&[
        "laplace", "--preset", "ou", "--alpha", "0", "--t", "1", "--mu", "0.5", "--nu", "0",
    ]);
    let v = stdout_json(&out);
    let psi = v["psi"].as_f64().unwrap();
    assert!((psi - 0.805018182194592).abs() < 1e-12, "psi = {psi}");
    let pre = v["psi_pre"].as_f64().unwrap();
    assert!((pre - psi).abs() < 1e-11 * psi);
    let ric = v["riccati"].as_f64().unwrap();
    assert!((ric - psi).abs() < 1e-6 * psi);
    assert!((v["variance"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["fisher"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn laplace_mu_zero_omits_pre_form() {
    let out = sdelap(&[
        "laplace", "--preset", "alpha-bridge", "--alpha", "1", "--t", "0.5", "--mu", "0", "--nu",
        "1",
    ]);
    let v = stdout_json(&out);
    assert!(v["psi_pre"].is_null());
    assert_eq!(v["riccati"].as_f64().unwrap(), 1.0);
    assert!((v["psi"].as_f64().unwrap() - 0.816496580927726).abs() < 1e-12);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = sdelap(&["laplace", "--preset", "ou", "--mu", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--t"), "stderr: {err}");
}

#[test]
fn unknown_preset_is_usage_error() {
    let out = sdelap(&["laplace", "--preset", "nope", "--t", "1", "--mu", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_emits_deterministic_csv() {
    let args = [
        "simulate", "--preset", "alpha-bridge", "--alpha", "1", "--t-end", "0.9", "--paths", "8",
        "--steps", "64", "--seed", "7",
    ];
    let a = sdelap(&args);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "path_id,x_t,q_t,ito_integral");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[0], i.to_string());
        assert!(cols[2].parse::<f64>().unwrap() > 0.0, "q must be positive");
    }
    let b = sdelap(&args);
    assert_eq!(a.stdout, b.stdout, "same seed must reproduce the same CSV");
}

#[test]
fn riccati_check_agrees_with_closed_form() {
    let out = sdelap(&[
        "riccati-check", "--preset", "alpha-bridge", "--alpha", "1", "--t", "0.9", "--mu", "1",
        "--tol", "1e-10",
    ]);
    let v = stdout_json(&out);
    assert!(v["rel_err"].as_f64().unwrap() < 1e-6);
}

#[test]
fn mle_dist_reports_regime_and_ks() {
    let tmp = std::env::temp_dir().join("sdelap_mle_dist.csv");
    let out = sdelap(&[
        "mle-dist", "--preset", "alpha-bridge", "--alpha", "0.5", "--t", "0.5", "--paths", "500",
        "--steps", "512", "--seed", "3", "--normalization", "fisher", "--out",
        tmp.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["regime"].as_str().unwrap(), "dickey-fuller");
    assert!(v["ks_pvalue"].as_f64().unwrap() > 0.01);
    let csv = std::fs::read_to_string(&tmp).unwrap();
    assert!(csv.starts_with("path_id,alpha_hat,q_t,statistic"));
    assert_eq!(csv.lines().count(), 501);
    std::fs::remove_file(&tmp).ok();
}

#[test]
fn consistency_passes_in_the_cauchy_regime() {
    let out = sdelap(&[
        "consistency", "--preset", "alpha-bridge", "--alpha", "0", "--paths", "400", "--steps",
        "800", "--seed", "5", "--deltas", "1e-1,1e-2,1e-3",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["pass"].as_bool().unwrap(), true);
    let medians = v["medians"].as_array().unwrap();
    assert_eq!(medians.len(), 3);
    assert!(v["final_median"].as_f64().unwrap() < 0.05);
}

#[test]
fn report_golden_config_exits_zero_and_round_trips() {
    let golden = configs_dir().join("golden.json");
    let dir = std::env::temp_dir().join("sdelap_report_test");
    std::fs::create_dir_all(&dir).unwrap();
    let out_a = dir.join("a.json");
    let out_b = dir.join("b.json");
    let emitted = dir.join("effective.json");

    let a = sdelap(&[
        "report", "--config", golden.to_str().unwrap(), "--out", out_a.to_str().unwrap(),
        "--emit-config", emitted.to_str().unwrap(), "--csv", dir.to_str().unwrap(),
    ]);
    assert_eq!(a.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&a.stderr));

    // re-running the emitted effective config reproduces the report verbatim
    let b = sdelap(&["report", "--config", emitted.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);
    assert_eq!(b.status.code(), Some(0));
    let ra: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_a).unwrap()).unwrap();
    let rb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_eq!(ra["config_hash"], rb["config_hash"]);
    assert_eq!(ra["seed"], rb["seed"]);
    let strip = |r: &serde_json::Value| {
        let mut checks = r["checks"].clone();
        for c in checks.as_array_mut().unwrap() {
            c["runtime_ms"] = 0.into();
        }
        checks
    };
    assert_eq!(strip(&ra), strip(&rb));

    let csv = std::fs::read_to_string(dir.join("checks.csv")).unwrap();
    assert!(csv.starts_with("name,statistic,reference,tolerance,pass"));
    assert_eq!(csv.lines().count(), ra["checks"].as_array().unwrap().len() + 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_normal_regime_config_exits_one() {
    let cfg = configs_dir().join("normal-regime.json");
    let out = sdelap(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("FAIL limit-law-normal-ks"), "stderr: {err}");
}

#[test]
fn report_rejects_malformed_config() {
    let dir = std::env::temp_dir().join("sdelap_bad_cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"model": {"preset": "ou"}, "unknown_key": 1}"#).unwrap();
    let out = sdelap(&["report", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
