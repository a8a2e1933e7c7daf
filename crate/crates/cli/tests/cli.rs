use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn annealkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annealkit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ANNEALKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = r#"{
  "model": {"chain": {"n": 6}},
  "protocols": ["reverse", "reverse_pause"],
  "tau": [1, 3],
  "h_scale": [0, 0.3],
  "runs": 4,
  "samples_per_run": 2,
  "backend": {"kind": "svmc", "beta_device": 4},
  "master_seed": 5
}"#;

#[test]
fn xft_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    for spins in ["1", "2"] {
        let out = annealkit(&["xft", "--spins", spins, "--beta2", "0.3"], dir.path());
        assert!(out.status.success());
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(report["max_abs_log_error"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn xft_rejects_unsupported_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = annealkit(&["xft", "--spins", "5"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn embed_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = annealkit(&["embed", "--length", "50", "--out", "g"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = dir.path().join("g/embedding.json");
    let out = annealkit(&["validate", "--embedding", "g/embedding.json"], dir.path());
    assert!(out.status.success());

    let mut export: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let mapping = export["mapping"].as_array_mut().unwrap();
    mapping[3] = mapping[1].clone();
    fs::write(&path, export.to_string()).unwrap();
    let out = annealkit(&["validate", "--embedding", "g/embedding.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_config_violations() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ok.json"), CONFIG).unwrap();
    let ok = annealkit(&["validate", "--config", "ok.json"], dir.path());
    assert!(ok.status.success());

    let bad = CONFIG.replace("\"runs\": 4", "\"runs\": 0, \"colour\": 1");
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = annealkit(&["validate", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("/runs"), "{text}");
    assert!(text.contains("/colour"), "{text}");
}

#[test]
fn run_analyze_render_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    let out = annealkit(&["run", "--config", "c.json", "--out", "r"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(dir.path().join("r/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 2 * 2 * 2 * 4 * 2);

    let out = annealkit(
        &["analyze", "r", "--beta2", "1.5", "--out", "a"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let results = fs::read_to_string(dir.path().join("a/results.jsonl")).unwrap();
    assert_eq!(results.lines().count(), 8);

    let out = annealkit(
        &["render", "a/results.jsonl", "--format", "csv", "--out", "a"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);

    let out = annealkit(
        &["render", "a/results.jsonl", "--format", "svg", "--out", "a"],
        dir.path(),
    );
    assert!(out.status.success());
    for name in ["reverse_success.svg", "reverse_pause_efficiency.svg"] {
        let svg = fs::read_to_string(dir.path().join("a").join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn seed_override_and_thread_env() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    let run = |out: &str, seed: &str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_annealkit"))
            .args(["run", "--config", "c.json", "--out", out, "--seed", seed])
            .env("ANNEALKIT_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(dir.path().join(out).join("records.jsonl")).unwrap()
    };
    let a = run("a", "17", "1");
    let b = run("b", "17", "3");
    let c = run("c", "18", "1");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn rerun_resumes_without_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    annealkit(&["run", "--config", "c.json", "--out", "r"], dir.path());
    let first = fs::read(dir.path().join("r/records.jsonl")).unwrap();
    let out = annealkit(&["run", "--config", "c.json", "--out", "r"], dir.path());
    assert!(stdout(&out).contains("8 resumed"), "{}", stdout(&out));
    assert_eq!(first, fs::read(dir.path().join("r/records.jsonl")).unwrap());
}

#[test]
fn unknown_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = annealkit(&["render", "x.jsonl", "--format", "png"], dir.path());
    assert!(!out.status.success());
}
