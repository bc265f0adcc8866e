use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn windcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windcast"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = windcast(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = windcast(&["benchmark", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = windcast(&["adf", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn unreadable_config_is_a_runtime_error() {
    let out = windcast(&["adf", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn adf_rejects_unit_root_on_white_noise() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("white_noise.conf");
    let out = windcast(&["adf", "--config", path_str(&conf), "--out", path_str(dir.path()), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("adf.json")).unwrap()).unwrap();
    let reject: Vec<&str> = json["reject_at"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(reject.contains(&"1%"), "{reject:?}");
}

#[test]
fn ingest_writes_cleaned_series() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("white_noise.conf");
    let out = windcast(&["ingest", "--config", path_str(&conf), "--out", path_str(dir.path()), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cleaned = std::fs::read_to_string(dir.path().join("cleaned.csv")).unwrap();
    assert_eq!(cleaned.lines().count(), 1501);
    assert!(dir.path().join("clean_report.json").exists());
}

#[test]
fn decompose_writes_one_file_per_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("tiny.conf");
    let out = windcast(&["decompose", "--config", path_str(&conf), "--out", path_str(dir.path()), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..4 {
        let leaf = std::fs::read_to_string(dir.path().join(format!("leaf_{k}.csv"))).unwrap();
        assert_eq!(leaf.lines().count(), 1201);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["leaves"].as_array().unwrap().len(), 4);
}

#[test]
fn benchmark_is_reproducible_for_a_fixed_seed() {
    let conf = fixture("tiny.conf");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = windcast(&[
            "benchmark",
            "--config",
            path_str(&conf),
            "--seed",
            "7",
            "--out",
            path_str(dir.path()),
            "--quiet",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(dir.path().join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(String::from_utf8_lossy(&reports[0]).starts_with("model,horizon_h,mae,rmse,r2\n"));
}

#[test]
fn train_then_evaluate_matches_benchmark() {
    let conf = fixture("tiny.conf");
    let dir = tempfile::tempdir().unwrap();
    let d = path_str(dir.path());
    let c = path_str(&conf);
    let train = windcast(&["train", "--config", c, "--out", d, "--quiet"]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    assert!(dir.path().join("models/WPD-SAM-BiLSTM.json").exists());
    let eval = windcast(&["evaluate", "--config", c, "--out", d, "--quiet"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let evaluated = std::fs::read(dir.path().join("report.csv")).unwrap();

    let other = tempfile::tempdir().unwrap();
    let bench = windcast(&["benchmark", "--config", c, "--out", path_str(other.path()), "--quiet"]);
    assert!(bench.status.success());
    assert_eq!(evaluated, std::fs::read(other.path().join("report.csv")).unwrap());
}

#[test]
fn evaluate_without_models_fails() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixture("tiny.conf");
    let out = windcast(&["evaluate", "--config", path_str(&conf), "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train"));
}

#[test]
fn selftest_passes() {
    let out = windcast(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(stdout.lines().count() >= 6);
}
