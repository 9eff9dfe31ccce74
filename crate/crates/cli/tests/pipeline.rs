use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn longbio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longbio"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = longbio(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small(out: &Path) -> Vec<String> {
    vec![
        "--out".into(),
        out.display().to_string(),
        "--budget".into(),
        "2K".into(),
        "--instances".into(),
        "4".into(),
        "--seed".into(),
        "9".into(),
    ]
}

fn with<'a>(cmd: &'a str, common: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(common.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn generate_twice_gives_the_same_content_hash() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&with("generate", &small(&a), &[]));
    ok(&with("generate", &small(&b), &[]));
    let (ma, mb) = (
        json(&a.join("suite.manifest.json")),
        json(&b.join("suite.manifest.json")),
    );
    assert_eq!(ma["content_sha256"], mb["content_sha256"]);
    assert_eq!(ma["seed"], 9);
    assert_eq!(ma["schema"], "longbio/1");
    assert!(ma["config_hash"].as_str().is_some_and(|h| h.len() == 64));
    assert_eq!(
        std::fs::read(a.join("suite.jsonl")).unwrap(),
        std::fs::read(b.join("suite.jsonl")).unwrap()
    );
}

#[test]
fn oracle_pipeline_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let common = small(dir.path());
    ok(&with("generate", &common, &[]));
    ok(&with("run", &common, &["--responder", "oracle"]));
    ok(&with("score", &common, &[]));
    let table = ok(&with("report", &common, &[]));
    assert!(table.starts_with("budget,task,accuracy,passed,n\n"), "{table}");

    let report = json(&dir.path().join("report.json"));
    let rows = report["accuracy"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r["accuracy"] == 1.0), "{rows:#?}");
    for f in [
        "accuracy.csv",
        "attributes.csv",
        "grid.csv",
        "scores.manifest.json",
        "responses.manifest.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn gibberish_pipeline_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let common = small(dir.path());
    let mut tasks = common.clone();
    tasks.extend(["--task".to_string(), "standard,calculation,citation:1,idk".to_string()]);
    ok(&with("generate", &tasks, &[]));
    ok(&with("run", &tasks, &["--responder", "gibberish"]));
    ok(&with("score", &tasks, &[]));
    let scores = std::fs::read_to_string(dir.path().join("scores.jsonl")).unwrap();
    assert!(scores.lines().all(|l| l.contains("\"verdict\":\"fail\"")));
}

#[test]
fn dry_run_writes_request_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let common = small(dir.path());
    ok(&with("generate", &common, &["--task", "standard,rank:2"]));
    ok(&with("run", &common, &["--task", "standard,rank:2", "--dry-run"]));
    let text = std::fs::read_to_string(dir.path().join("requests.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 8);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let body: Value = serde_json::from_str(v["body"].as_str().unwrap()).unwrap();
        assert_eq!(body["temperature"], 0.0);
        assert!(v["url"].as_str().unwrap().ends_with("/chat/completions"));
    }
}

#[test]
fn default_config_has_800_instances() {
    let toml = ok(&["config"]);
    assert!(toml.lines().any(|l| l.trim() == "instances = 800"), "{toml}");
    assert!(toml.contains("2048"));
}

fn assert_machine_error(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    assert!(v["error"].is_string() && v["message"].is_string());
    v
}

#[test]
fn invalid_config_is_a_single_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nnot_a_field = true\n").unwrap();
    let v = assert_machine_error(&longbio(&["generate", "--config", cfg.to_str().unwrap()]));
    assert!(v["message"].as_str().unwrap().contains("not_a_field"));

    assert_machine_error(&longbio(&["generate", "--instances", "0"]));
    assert_machine_error(&longbio(&["generate", "--budget", "0"]));
    assert_machine_error(&longbio(&["generate", "--task", "nonsense"]));
    let missing = dir.path().join("missing.toml");
    assert_machine_error(&longbio(&["generate", "--config", missing.to_str().unwrap()]));
}

#[test]
fn scoring_without_a_suite_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_machine_error(&longbio(&with("score", &small(dir.path()), &[])));
}
