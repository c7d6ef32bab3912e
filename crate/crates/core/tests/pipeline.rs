mod common;

use std::sync::Arc;

use common::*;
use contextclaim::dataset::{write_corpus, Claim, Dataset, Split};
use contextclaim::detect::Prediction;
use contextclaim::error::Error;
use contextclaim::http::{HttpRequest, HttpResponse, Transport};
use contextclaim::io;
use contextclaim::offline::SpyTransport;
use contextclaim::pipeline::{verify_manifest, Backends, ClaimFailure, Pipeline, Stage, PREDICTIONS_FILE};

fn corpus() -> std::path::PathBuf {
    fixture("offline/claims.jsonl")
}

#[test]
fn baseline_mode_skips_retrieval_and_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let spies = Spies::new();
    let cfg = offline_config(&tmp.path().join("cache"), &["context_mode=\"none\"", "prompt.shots=0"]);
    let p = Pipeline::with_backends(cfg, spies.backends()).unwrap();
    let m = p.run(&corpus(), &tmp.path().join("out")).unwrap();
    assert_eq!(spies.wiki.calls(), 0);
    assert_eq!(spies.summarizer.calls(), 0);
    assert_eq!(spies.classifier.calls(), 20);
    assert!(!m.artifacts.contains_key("knowledge_bases"));
    assert!(!m.providers.contains_key("summarizer"));
    let preds: Vec<Prediction> = io::read_jsonl(&tmp.path().join("out").join(PREDICTIONS_FILE)).unwrap();
    assert!(preds.iter().all(|p| p.system_tag.starts_with("baseline/")));
}

#[test]
fn rerun_in_record_mode_hits_the_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let first = Spies::new();
    Pipeline::with_backends(offline_config(&cache, &[]), first.backends())
        .unwrap()
        .run(&corpus(), &tmp.path().join("a"))
        .unwrap();
    assert!(first.total() > 0);
    let second = Spies::new();
    Pipeline::with_backends(offline_config(&cache, &[]), second.backends())
        .unwrap()
        .run(&corpus(), &tmp.path().join("b"))
        .unwrap();
    assert_eq!(second.total(), 0, "unchanged stages must not call providers again");
}

#[test]
fn replay_miss_aborts_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let spies = Spies::new();
    let cfg = offline_config(&tmp.path().join("empty-cache"), &["run_mode=\"replay\""]);
    let err = Pipeline::with_backends(cfg, spies.backends())
        .unwrap()
        .run(&corpus(), &tmp.path().join("out"))
        .unwrap_err();
    assert!(err.is_cache_miss(), "{err}");
    assert_eq!(spies.total(), 0);
}

#[test]
fn live_mode_writes_no_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    Pipeline::with_backends(offline_config(&cache, &["run_mode=\"live\""]), Spies::new().backends())
        .unwrap()
        .run(&corpus(), &tmp.path().join("out"))
        .unwrap();
    assert!(!cache.exists());
}

/// Fails completions whose prompt mentions `needle` with HTTP 400.
struct Poisoned {
    inner: Arc<dyn Transport>,
    needle: &'static str,
}

impl Transport for Poisoned {
    fn send(&self, req: &HttpRequest) -> contextclaim::Result<HttpResponse> {
        let body = req.body.as_ref().map(|b| b.to_string()).unwrap_or_default();
        if body.contains(self.needle) {
            return Ok(HttpResponse {
                status: 400,
                body: "rejected".into(),
            });
        }
        self.inner.send(req)
    }
}

#[test]
fn per_claim_failures_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let spies = Spies::new();
    let backends = Backends {
        classifier: Some(Arc::new(Poisoned {
            inner: spies.classifier.clone(),
            needle: "Zorblax",
        })),
        ..spies.backends()
    };
    let out = tmp.path().join("out");
    let m = Pipeline::with_backends(offline_config(&tmp.path().join("cache"), &[]), backends)
        .unwrap()
        .run(&corpus(), &out)
        .unwrap();
    assert_eq!((m.counts.predictions, m.counts.failures), (19, 1));
    let failures: Vec<ClaimFailure> = io::read_jsonl(&out.join("failures.jsonl")).unwrap();
    assert_eq!(failures[0].claim_id, "cc17");
    assert_eq!(failures[0].stage, Stage::Classify);
}

#[test]
fn all_claims_failing_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let spies = Spies::new();
    let backends = Backends {
        classifier: Some(Arc::new(Poisoned {
            inner: spies.classifier.clone(),
            needle: "### Response:",
        })),
        ..spies.backends()
    };
    let err = Pipeline::with_backends(offline_config(&tmp.path().join("cache"), &[]), backends)
        .unwrap()
        .run(&corpus(), &tmp.path().join("out"))
        .unwrap_err();
    assert!(matches!(err, Error::AllClaimsFailed(20)), "{err}");
}

#[test]
fn tampered_artifacts_fail_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    Pipeline::with_backends(offline_config(&tmp.path().join("cache"), &[]), Spies::new().backends())
        .unwrap()
        .run(&corpus(), &out)
        .unwrap();
    verify_manifest(&out).unwrap();
    std::fs::write(out.join(PREDICTIONS_FILE), "{}\n").unwrap();
    assert!(matches!(verify_manifest(&out), Err(Error::Manifest(_))));
    std::fs::remove_file(out.join(PREDICTIONS_FILE)).unwrap();
    assert!(matches!(verify_manifest(&out), Err(Error::Manifest(_))));
}

#[test]
fn outputs_are_in_claim_id_order() {
    let tmp = tempfile::tempdir().unwrap();
    let mut claims: Vec<Claim> = contextclaim::dataset::read_corpus(&corpus()).unwrap();
    claims.reverse();
    let shuffled = tmp.path().join("reversed.jsonl");
    write_corpus(&shuffled, &claims).unwrap();
    let out = tmp.path().join("out");
    Pipeline::with_backends(offline_config(&tmp.path().join("cache"), &["workers=3"]), Spies::new().backends())
        .unwrap()
        .run(&shuffled, &out)
        .unwrap();
    let preds: Vec<Prediction> = io::read_jsonl(&out.join(PREDICTIONS_FILE)).unwrap();
    let ids: Vec<&str> = preds.iter().map(|p| p.claim_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn summary_mode_without_summarizer_settings_fails_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = offline_config(&tmp.path().join("cache"), &["summarizer.provider=\"http\""]);
    let p = Pipeline::with_backends(cfg, Backends::default()).unwrap();
    let claim = Claim::new("x", "Texas", Dataset::CT22, Split::Test, None).unwrap();
    let err = p.contextualize(&[&claim], &[]).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn replay_backend_is_never_consulted() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    Pipeline::with_backends(offline_config(&cache, &[]), Spies::new().backends())
        .unwrap()
        .run(&corpus(), &tmp.path().join("a"))
        .unwrap();
    let spy = Arc::new(SpyTransport::new(Arc::new(contextclaim::offline::HeuristicCompletions)));
    let backends = Backends {
        wiki: Some(spy.clone()),
        summarizer: Some(spy.clone()),
        classifier: Some(spy.clone()),
        ..Backends::default()
    };
    Pipeline::with_backends(offline_config(&cache, &["run_mode=\"replay\""]), backends)
        .unwrap()
        .run(&corpus(), &tmp.path().join("b"))
        .unwrap();
    assert_eq!(spy.calls(), 0);
    assert_eq!(
        std::fs::read(tmp.path().join("a").join(PREDICTIONS_FILE)).unwrap(),
        std::fs::read(tmp.path().join("b").join(PREDICTIONS_FILE)).unwrap()
    );
}
