mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contextclaim"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(tmp.path(), &["evaluate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert_eq!(bin(tmp.path(), &[]).status.code(), Some(2));
    assert_eq!(bin(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn operational_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(tmp.path(), &["evaluate", "--preds", "nope.jsonl", "--gold", "nope.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.jsonl"));
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "retrieval = { alpha = 2.0 }\n").unwrap();
    let o = bin(tmp.path(), &["--config", s(&bad), "run", "--corpus", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn evaluate_json_matches_hand_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = fixture("transitions/gold.jsonl");
    let preds = fixture("transitions/system.jsonl");
    let o = bin(tmp.path(), &["--json", "evaluate", "--preds", s(&preds), "--gold", s(&gold)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cm = &v["confusion"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| cm[k].as_u64().unwrap()).sum();
    assert_eq!(total, 12);
    assert_eq!(v["metrics"]["n"], 12);
}

#[test]
fn compare_reports_fixture_tally() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(
        tmp.path(),
        &[
            "--json",
            "compare",
            "--baseline",
            s(&fixture("transitions/baseline.jsonl")),
            "--system",
            s(&fixture("transitions/system.jsonl")),
            "--gold",
            s(&fixture("transitions/gold.jsonl")),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["fixed"].as_u64(), v["regressed"].as_u64()), (Some(3), Some(3)));
    assert_eq!((v["net_fp_delta"].as_i64(), v["net_fn_delta"].as_i64()), (Some(1), Some(-1)));
}

#[test]
fn ingest_reports_rejected_rows_and_splits() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("raw.csv");
    let mut rows = String::from("id,text,label\n");
    for i in 0..20 {
        rows.push_str(&format!("c{i},Claim number {i},{}\n", i % 3 == 0));
    }
    rows.push_str("c99,,true\n");
    std::fs::write(&input, rows).unwrap();
    let o = bin(
        tmp.path(),
        &["ingest", "--input", "raw.csv", "--out", "train.jsonl", "--dev-fraction", "0.25", "--dev-out", "dev.jsonl"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
    assert!(stdout(&o).contains("rejected rows: 1"));
    let train = contextclaim::dataset::read_corpus(&tmp.path().join("train.jsonl")).unwrap();
    let dev = contextclaim::dataset::read_corpus(&tmp.path().join("dev.jsonl")).unwrap();
    assert_eq!(train.len() + dev.len(), 20);
    assert_eq!(dev.len(), 5);
}

#[test]
fn staged_commands_match_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = fixture("offline/pipeline.toml");
    let claims = fixture("offline/claims.jsonl");
    let cache = format!("cache_root={}", toml_str(&d.join("cache").display().to_string()));
    let common = ["--config", s(&cfg), "--set", cache.as_str()];
    let step = |args: &[&str]| {
        let full: Vec<&str> = common.iter().copied().chain(args.iter().copied()).collect();
        let o = bin(d, &full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    };
    step(&["extract", "--claims", s(&claims), "--out", "entities.jsonl"]);
    step(&["retrieve", "--claims", s(&claims), "--entities", "entities.jsonl", "--out", "kbs.jsonl"]);
    step(&["context", "--claims", s(&claims), "--kbs", "kbs.jsonl", "--out", "contexts.jsonl"]);
    step(&["classify", "--claims", s(&claims), "--contexts", "contexts.jsonl", "--out", "preds.jsonl"]);
    step(&["run", "--corpus", s(&claims), "--out", "run"]);
    assert_eq!(
        std::fs::read(d.join("preds.jsonl")).unwrap(),
        std::fs::read(d.join("run/predictions.jsonl")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.join("contexts.jsonl")).unwrap(),
        std::fs::read(d.join("run/contexts.jsonl")).unwrap()
    );
}

#[test]
fn classify_flags_reach_the_prompt() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = fixture("offline/pipeline.toml");
    let claims = fixture("offline/claims.jsonl");
    let cache = format!("cache_root={}", toml_str(&d.join("cache").display().to_string()));
    let o = bin(
        d,
        &[
            "--config",
            s(&cfg),
            "--set",
            &cache,
            "classify",
            "--mode",
            "none",
            "--no-doubt-directive",
            "--shots",
            "0",
            "--claims",
            s(&claims),
            "--out",
            "preds.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let preds: Vec<contextclaim::detect::Prediction> = contextclaim::io::read_jsonl(&d.join("preds.jsonl")).unwrap();
    assert_eq!(preds.len(), 20);
    assert!(preds[0].system_tag.contains("baseline"), "{}", preds[0].system_tag);
    assert!(preds[0].system_tag.contains("zs"), "{}", preds[0].system_tag);
}

#[test]
fn agreement_prints_each_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(
        tmp.path(),
        &[
            "agreement",
            "--ratings",
            s(&fixture("ratings/summarizer_a.csv")),
            "--compare",
            s(&fixture("ratings/summarizer_b.csv")),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("kappa")).count(), 3, "{text}");
    assert!(text.contains(" p "), "{text}");
}

#[test]
fn ablate_flags_large_deltas() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(
        tmp.path(),
        &[
            "--json",
            "ablate",
            "--gold",
            s(&fixture("transitions/gold.jsonl")),
            "--arm",
            &format!("base={}", s(&fixture("transitions/baseline.jsonl"))),
            "--arm",
            &format!("ctx={}", s(&fixture("transitions/system.jsonl"))),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 1);
    let o = bin(tmp.path(), &["ablate", "--gold", "g", "--arm", "only=x"]);
    assert_eq!(o.status.code(), Some(1));
}
