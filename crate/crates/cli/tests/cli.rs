use std::path::PathBuf;
use std::process::Command;

fn tlq() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tlq"));
    for var in ["TLQ_CONFIG", "TLQ_SEED", "TLQ_TRIALS", "TLQ_OUT", "TLQ_FORMAT", "TLQ_THREADS"] {
        c.env_remove(var);
    }
    c
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn invalid_config_names_the_violated_predicate() {
    let path = tmp("bad-eta.json");
    std::fs::write(&path, r#"{"refute": {"refutation": {"eta": 0.45, "eps": 0.03, "c": 1.0, "m": 40, "q": 16,
        "c1": 1.0, "c2": 1.0, "c3": 1.0, "separation_ratio": 100.0, "norm_constant": 1.0, "oversample": 1.0}}}"#)
        .unwrap();
    let out = tlq().args(["refute", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("η < (1/2 − 4ε)/c"), "{stderr}");
}

#[test]
fn unknown_config_field_is_rejected() {
    let path = tmp("typo.json");
    std::fs::write(&path, r#"{"sqdim": {"parity_dim": [4]}}"#).unwrap();
    let out = tlq().args(["sqdim", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn sqdim_reports_sixteen_for_parities_on_four_bits() {
    let out_path = tmp("sqdim.csv");
    let status = tlq().args(["sqdim", "--format", "csv", "--trials", "30", "--out"]).arg(&out_path).status().unwrap();
    assert!(status.success());
    let body = std::fs::read_to_string(&out_path).unwrap();
    assert!(body.lines().any(|l| l.ends_with(",parity_n4.d,16.0")), "{body}");
    let mut manifest = out_path.into_os_string();
    manifest.push(".manifest.json");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest).unwrap()).unwrap();
    assert_eq!(m["csv_schema_version"], 1);
    assert_eq!(m["seed"], tlq_cli::config::DEFAULT_SEED);
}

#[test]
fn environment_overrides_mirror_flags() {
    let a = tlq().args(["fourier", "--seed", "7"]).output().unwrap();
    let b = tlq().arg("fourier").env("TLQ_SEED", "7").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 7);
}
