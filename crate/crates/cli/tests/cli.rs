use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qsr_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsr-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn footer(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let line = text.lines().last().unwrap();
    serde_json::from_str(line.strip_prefix("# ").expect("json footer")).unwrap()
}

#[test]
fn coeffs_for_vacuum_preset() {
    let v = stdout_json(&qsr_lab(&["--preset", "fig6a", "coeffs", "--temperature", "0"]));
    let sigma = v["sigma_beta"].as_f64().unwrap();
    assert!((sigma - 0.543_143_981_286_789_9).abs() < 1e-9);
    assert_eq!(v["gamma"], v["gamma_beta"]);
    assert_eq!(v["omega_R_beta"].as_f64().unwrap(), 1.0 - sigma);
}

#[test]
fn unbiased_system_has_no_shift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "system": {"epsilon": 0, "delta": 1},
            "model": {"type": "ohmic", "eta": 0.59, "lambda": 2}, "environment": {"T": 0.3}}"#,
    );
    let v = stdout_json(&qsr_lab(&["--config", &cfg, "coeffs"]));
    assert_eq!(v["sigma_beta"].as_f64().unwrap(), 0.0);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "empty.json", "");
    let out = qsr_lab(&["--config", &empty, "validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config is empty"));

    let typo = write_config(dir.path(), "typo.json", "{\n \"schema_version\": 1,\n \"drive\": {\"xi\": 1e-3, \"omega\": 0.1}\n}");
    let out = qsr_lab(&["--config", &typo, "coeffs"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("drive") && err.contains("unknown field `omega`") && err.contains("line 3"), "{err}");

    let out = qsr_lab(&["--preset", "fig9", "coeffs"]);
    assert_eq!(out.status.code(), Some(2));

    let gap_on_pole = write_config(
        dir.path(),
        "pole.json",
        r#"{"schema_version": 1, "preset": "fig6b", "model": {"mu": 1.0}, "environment": {"T": 0.3}}"#,
    );
    assert_eq!(qsr_lab(&["--config", &gap_on_pole, "coeffs"]).status.code(), Some(2));
}

#[test]
fn validate_passes_and_flags_corrupted_tolerance() {
    let out = qsr_lab(&["validate"]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{report}");
    assert!(report.lines().all(|l| l.starts_with("PASS")));

    let out = qsr_lab(&["validate", "--tol", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL vacuum shift closed forms"));
}

#[test]
fn snr_curve_is_deterministic() {
    let a = qsr_lab(&["--preset", "fig6a", "snr-curve"]);
    let b = qsr_lab(&["--preset", "fig6a", "--threads", "3", "snr-curve"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,R,A,phi,omega_R"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn snr_curve_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "preset": "fig6b", "environment": {"T_axis": {"start": 0.1, "stop": 1, "n": 10, "spacing": "log"}},
            "output": {"format": "json"}}"#,
    );
    let v = stdout_json(&qsr_lab(&["--config", &cfg, "snr-curve"]));
    assert_eq!(v.as_array().unwrap().len(), 10);
    assert!(v[0]["R"].as_f64().unwrap() >= 0.0);
}

#[test]
fn scan_writes_grid_and_classifications() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("scan");
    let out = qsr_lab(&["--preset", "fig5a", "--out", out_dir.to_str().unwrap(), "scan"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    assert!(csv.starts_with("eta,T,snr,omega_R,gamma_beta,sigma_beta\n"));
    assert_eq!(csv.lines().count(), 1 + 100 * 200);
    let classes: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("classifications.json")).unwrap()).unwrap();
    assert_eq!(classes.as_array().unwrap().len(), 100);
    assert!(classes[0]["classification"]["kind"].is_string());

    assert_eq!(qsr_lab(&["--preset", "fig5a", "scan"]).status.code(), Some(2));
}

#[test]
fn threads_fall_back_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qsr-lab"))
        .env("QSR_LAB_THREADS", "2")
        .args(["--preset", "fig5b", "--out", dir.path().to_str().unwrap(), "scan"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn undriven_simulation_matches_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "preset": "fig6a", "drive": {"xi": 0},
            "simulate": {"tau_end": 60, "initial": {"re_dplus": 0.2, "im_dplus": -0.1, "d0": 0.5}}}"#,
    );
    let v = footer(&qsr_lab(&["--config", &cfg, "simulate", "--temperature", "0.3"]));
    assert!(v["relaxation_max_deviation"].as_f64().unwrap() <= 1e-8, "{v}");
}

#[test]
fn driven_simulation_matches_linear_response() {
    let out = qsr_lab(&["--preset", "fig6b1", "simulate", "--temperature", "0.3"]);
    let v = footer(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("tau,re_dplus,im_dplus,d0,x\n"));
    assert!(v["response"]["amplitude_rel_error"].as_f64().unwrap() <= 0.01, "{v}");
    assert!(v["response"]["phase_error"].as_f64().unwrap().abs() <= 0.02, "{v}");
    assert_eq!(v["perturbative"], Value::Bool(true));
}

#[test]
fn strong_drive_gets_an_advisory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "preset": "fig6a", "drive": {"xi": 0.2}}"#);
    let out = qsr_lab(&["--config", &cfg, "simulate", "--temperature", "0.3"]);
    let v = footer(&out);
    assert_eq!(v["perturbative"], Value::Bool(false));
    assert!(v["advisory"].is_string());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: xi = 0.2"));
}

#[test]
fn oversized_step_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "preset": "fig6a", "simulate": {"dt": 0.5}}"#);
    let out = qsr_lab(&["--config", &cfg, "simulate", "--temperature", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}
