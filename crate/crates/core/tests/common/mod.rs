//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use contextclaim::dataset::{Claim, Dataset, Label, Split};
use contextclaim::detect::{ParseStatus, Prediction};
use contextclaim::offline::{HeuristicCompletions, SpyTransport};
use contextclaim::pipeline::{Backends, PipelineConfig};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn golden(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/v1").join(rel)
}

pub fn claim(id: &str, label: Label) -> Claim {
    Claim::new(id, format!("claim {id}"), Dataset::Custom, Split::Test, Some(label)).unwrap()
}

pub fn prediction(id: &str, label: Label) -> Prediction {
    Prediction {
        claim_id: id.to_string(),
        label,
        parse_status: ParseStatus::Clean,
        system_tag: "test".into(),
        raw_response: label.answer().into(),
    }
}

/// Offline fixture config with the cache redirected to `cache`.
pub fn offline_config(cache: &std::path::Path, overrides: &[&str]) -> PipelineConfig {
    let mut all = vec![format!("cache_root={}", toml_str(&cache.display().to_string()))];
    all.extend(overrides.iter().map(|s| s.to_string()));
    PipelineConfig::load(Some(&fixture("offline/pipeline.toml")), &all).unwrap()
}

pub fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Spies wrapping the offline wiki and heuristic LLM backends.
pub struct Spies {
    pub wiki: Arc<SpyTransport>,
    pub summarizer: Arc<SpyTransport>,
    pub classifier: Arc<SpyTransport>,
}

impl Spies {
    pub fn new() -> Self {
        let pages = contextclaim::offline::FixtureWiki::from_file(&fixture("offline/wiki_pages.json")).unwrap();
        Spies {
            wiki: Arc::new(SpyTransport::new(Arc::new(pages))),
            summarizer: Arc::new(SpyTransport::new(Arc::new(HeuristicCompletions))),
            classifier: Arc::new(SpyTransport::new(Arc::new(HeuristicCompletions))),
        }
    }

    pub fn backends(&self) -> Backends {
        Backends {
            wiki: Some(self.wiki.clone()),
            summarizer: Some(self.summarizer.clone()),
            classifier: Some(self.classifier.clone()),
            ..Backends::default()
        }
    }

    pub fn total(&self) -> usize {
        self.wiki.calls() + self.summarizer.calls() + self.classifier.calls()
    }
}
