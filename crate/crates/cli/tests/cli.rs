use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "seed": 3,
  "construction": {
    "train_count": 30, "test_count": 3,
    "level1": {"epochs": 1, "hidden_sizes": [8], "recurrent": false},
    "level2": {"epochs": 1, "hidden_sizes": [8], "recurrent": false}
  }
}"#;

fn nt(dir: &Path, threads: &str, args: &[&str]) -> Output {
    let config = dir.join("small.json");
    if !config.exists() {
        std::fs::write(&config, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_nested-tom"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--config")
        .arg(&config)
        .env("NESTED_TOM_THREADS", threads)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let o = nt(dir, "1", args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

fn construction(dir: &Path, threads: &str) {
    for args in [
        &["gen-data", "--env", "construction"][..],
        &["train", "--env", "construction"],
        &["eval", "--env", "construction", "--fractions", "0.05,0.5,1"],
    ] {
        let o = nt(dir, threads, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

fn eval_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir.join("out/eval"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn gen_data_writes_the_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--env", "construction", "--kind", "test", "--count", "5", "--seed", "7"]);
    let text = std::fs::read_to_string(dir.path().join("out/data/construction-test.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let ep: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(ep["env"], "construction");
        assert_eq!(ep["kind"], "test");
    }
    assert!(dir.path().join("out/manifests").read_dir().unwrap().count() > 0);
}

#[test]
fn evaluation_is_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    construction(a.path(), "1");
    construction(b.path(), "3");
    let (ea, eb) = (eval_files(a.path()), eval_files(b.path()));
    assert!(ea.contains_key("construction-test.csv"));
    assert!(ea.contains_key("construction-test-progress-ours.csv"));
    assert_eq!(ea, eb);

    ok(a.path(), &["report"]);
    let md = std::fs::read_to_string(a.path().join("out/report/report.md")).unwrap();
    assert!(md.contains("construction-test: accuracy over particle budget"));
    assert!(a.path().join("out/report/construction-test-kl.csv").exists());
    assert!(a.path().join("out/report/construction-test-progress.csv").exists());

    ok(a.path(), &["infer", "--env", "construction", "--episode", "1", "--fraction", "0.5"]);
    let rows = std::fs::read_to_string(a.path().join("out/infer/construction-test-ep1-agent1-ours.csv")).unwrap();
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    for line in rows.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        *mass.entry(f[1].parse().unwrap()).or_default() += f[3].parse::<f64>().unwrap();
    }
    assert!(!mass.is_empty());
    assert!(mass.values().all(|m| (m - 1.0).abs() < 1e-9), "{mass:?}");
}

#[test]
fn eval_without_checkpoints_reports_a_missing_model() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--env", "construction", "--kind", "test", "--count", "2"]);
    let o = nt(dir.path(), "1", &["eval", "--env", "construction", "--method", "ours"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_json(&o);
    assert_eq!(e["error"], "missing_model");
    assert_eq!(e["exit_status"], 3);
}

#[test]
fn eval_without_data_reports_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = nt(dir.path(), "1", &["eval", "--env", "construction", "--method", "exact"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "missing_input");
}

#[test]
fn usage_errors_exit_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["eval", "--env", "construction", "--fractions", "0,0.5"][..],
        &["eval", "--env", "construction", "--fractions", "1.5"],
        &["gen-data", "--env", "construction", "--kind", "nope"],
        &["gen-data", "--env", "elsewhere"],
        &["infer", "--env", "driving", "--fraction", "-1"],
    ] {
        let o = nt(dir.path(), "1", args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&o)["exit_status"], 2, "{args:?}");
    }
}

#[test]
fn malformed_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"seed\": ").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nested-tom"))
        .args(["report", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(error_json(&o)["error"], "parse");
}
