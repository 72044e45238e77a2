use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_belavkin-lab"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).env_remove("BELAVKIN_LAB_THREADS").output().expect("spawn")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn sigma_z_observable_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_sigma_z_invalid.json");
    let out = run(&["validate", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["error"]["kind"], "assumption");
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 1, "model": {"kind": "single", "n": 10}, "sed": 3}"#);
    let out = run(&["validate", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sed"));
}

#[test]
fn missing_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["validate", "/nonexistent/scenario.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constants_for_dft4_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("noise_constants.json");
    let out = run(&["constants", cfg.to_str().unwrap(), "--deterministic"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("constants.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["model_digest"].is_string());
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!((v["constants"]["b"][i][j].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((v["constants"]["b_matrix"][i][j][0].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.333333333333"));
}

#[test]
fn experiment_writes_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("residual_exp_lemma.json");
    let out = run(&["experiment", cfg.to_str().unwrap(), "--deterministic", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    for ext in ["json", "txt", "csv"] {
        let text = std::fs::read_to_string(dir.path().join(format!("residual_order.{ext}"))).unwrap();
        assert!(text.contains("schema_version"), "{ext}");
        assert!(text.contains("model_digest"), "{ext}");
    }
}

#[test]
fn failing_experiment_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "model": {"kind": "noise", "n": 100},
            "experiment": {"name": "residual_order", "experiment": "increment_noise", "sweep": [100, 1000, 10000, 100000]}}"#,
    );
    let out = run(&["experiment", cfg.to_str().unwrap(), "--deterministic"], dir.path());
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn deterministic_runs_match_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_simulate.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run(&["simulate", cfg.to_str().unwrap(), "--deterministic", "--threads", "1"], &a);
    assert_eq!(out.status.code(), Some(0));
    let out = bin()
        .args(["simulate", cfg.to_str().unwrap(), "--deterministic", "--out-dir"])
        .arg(&b)
        .env("BELAVKIN_LAB_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let fa = std::fs::read(a.join("trajectories.csv")).unwrap();
    let fb = std::fs::read(b.join("trajectories.csv")).unwrap();
    assert_eq!(fa, fb);
    assert!(!String::from_utf8_lossy(&fa).contains("generated_unix"));
}

#[test]
fn timestamp_only_without_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("memory_swap_simulate.json");
    let out = run(&["simulate", cfg.to_str().unwrap(), "--seed", "9"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(text.contains("# generated_unix="));
    assert!(text.contains("# seed=9"));
}

#[test]
fn integrate_reports_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_integrate.json");
    let out = run(&["integrate", cfg.to_str().unwrap(), "--deterministic"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("sde_paths.csv")).unwrap();
    // 4 paths, every 100th of 10^4 steps plus the start.
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 101);
}
