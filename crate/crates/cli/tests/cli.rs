use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_concentrix"));
    c.env_remove("CONCENTRIX_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(sub: &str, config: &Path, extra: &[&str]) -> Output {
    bin().arg(sub).arg("--config").arg(config).args(extra).output().unwrap()
}

fn lds_deviation(target: Option<f64>) -> Value {
    let mut params = json!({
        "reward": {"r": "norm"},
        "x0": [0.0],
        "N": 200,
        "M": 400,
        "epsilons": [0.1, 0.2, 0.3]
    });
    if let Some(t) = target {
        params["target_mean"] = json!({"value": t, "note": "deliberately wrong"});
    }
    json!({"system": {"type": "lds", "A": [[0.5]]}, "pipeline": "verify-deviation", "seed": 99, "params": params})
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn certify_lds_prints_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"system": {"type": "lds", "A": [[0.5]]}, "pipeline": "certify", "seed": 1, "params": {"N": 100}}),
    );
    let out = run("certify", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["t1"]["C"], 1.0);
    assert!((report["result"]["tensorized_constant"].as_f64().unwrap() - 400.0).abs() < 1e-9);
    assert_eq!(report["config"]["seed"], 1);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn non_contractive_lds_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"system": {"type": "lds", "A": [[1.0]]}, "pipeline": "certify", "seed": 1, "params": {"N": 10}}),
    );
    let out = run("certify", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "spec");
}

#[test]
fn verify_reference_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    let out = run("verify", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mis_set_target_mean_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let exact = (8.0 / (3.0 * std::f64::consts::PI)).sqrt();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(Some(exact + 1.0)));
    let out_dir = dir.path().join("out");
    let out = run("verify", &cfg, &["--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(out_dir.join("verify-deviation.csv")).unwrap();
    assert!(csv.starts_with("epsilon,empirical,ci_low,ci_high,bound,pass\n"));
    assert!(csv.lines().skip(2).all(|l| l.ends_with(",false")), "{csv}");
}

#[test]
fn missing_seed_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = lds_deviation(None);
    v.as_object_mut().unwrap().remove("seed");
    let cfg = write_config(dir.path(), "v.json", &v);
    let out = run("verify", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");
}

#[test]
fn pipeline_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    assert_eq!(run("certify", &cfg, &[]).status.code(), Some(2));
    assert_eq!(run("sweep", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn sweep_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = |params: Value| json!({"system": {"type": "lds", "A": [[0.5]]}, "pipeline": "sweep", "seed": 1, "params": params});
    let empty = write_config(dir.path(), "e.json", &base(json!({"variable": "N", "grid": [], "epsilon": 0.3})));
    assert_eq!(run("sweep", &empty, &[]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "u.json", &base(json!({"variable": "T", "grid": [1.0]})));
    assert_eq!(run("sweep", &unknown, &[]).status.code(), Some(2));
}

#[test]
fn sweep_n_csv_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({"system": {"type": "lds", "A": [[0.5]]}, "pipeline": "sweep", "seed": 1,
                "params": {"variable": "N", "grid": [10, 100, 1000], "epsilon": 0.3}}),
    );
    let out_dir = dir.path().join("out");
    assert_eq!(run("sweep", &cfg, &["--out", out_dir.to_str().unwrap()]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let bounds: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(bounds.len(), 3);
    assert!(bounds.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn system_path_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sys.json", &json!({"type": "lds", "A": [[0.5]]}));
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({"system": "sys.json", "pipeline": "certify", "seed": 1, "params": {"N": 100}}),
    );
    assert_eq!(run("certify", &cfg, &[]).status.code(), Some(0));
}

#[test]
fn workers_do_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    let mut outputs = Vec::new();
    for w in ["1", "8"] {
        let out_dir = dir.path().join(format!("w{w}"));
        let out = run("verify", &cfg, &["--workers", w, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push((
            std::fs::read(out_dir.join("verify-deviation.json")).unwrap(),
            std::fs::read(out_dir.join("verify-deviation.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn env_workers_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    let a = run("verify", &cfg, &[]).stdout;
    let b = bin()
        .env("CONCENTRIX_WORKERS", "3")
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .stdout;
    assert_eq!(a, b);
}

#[test]
fn report_reruns_from_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    let first = run("verify", &cfg, &["--seed", "5"]);
    let report = dir.path().join("report.json");
    std::fs::write(&report, &first.stdout).unwrap();
    let second = run("verify", &report, &[]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn seed_override_changes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &lds_deviation(None));
    let a: Value = serde_json::from_slice(&run("verify", &cfg, &[]).stdout).unwrap();
    let b: Value = serde_json::from_slice(&run("verify", &cfg, &["--seed", "12"]).stdout).unwrap();
    assert_eq!(b["config"]["seed"], 12);
    assert_ne!(a["config_hash"], b["config_hash"]);
}
