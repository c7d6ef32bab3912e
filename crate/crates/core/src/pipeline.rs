//! End-to-end orchestration: configuration, provider wiring, per-stage
//! execution over a bounded worker pool, and the run manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_corpus, Claim, Dataset, Label};
use crate::detect::{classify, sample_few_shot, Demonstration, Prediction, PromptConfig};
use crate::embedding::{Embedder, EmbeddingProvider, HashEmbedder, HttpEmbedder, RetrievalWeights};
use crate::entity::{extract_entities, DiseaseLexicon, Entity, HttpNer, NerProvider, RuleNer};
use crate::error::{Error, Result};
use crate::http::{CachingTransport, RateLimiter, ReqwestTransport, ResponseCache, RunMode, Transport};
use crate::io::{self, sha256_hex};
use crate::llm::{HttpLlm, LlmProvider, ReplayLlm};
use crate::offline::{FixtureWiki, HeuristicCompletions};
use crate::summarize::{materialize_context, ContextMode, ContextSummary};
use crate::wiki::{build_knowledge_base, KbOptions, KnowledgeBase, WikiClient, WIKIPEDIA_API};

pub const ENTITIES_FILE: &str = "entities.jsonl";
pub const KNOWLEDGE_BASES_FILE: &str = "knowledge_bases.jsonl";
pub const CONTEXTS_FILE: &str = "contexts.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

const HEURISTIC_ENDPOINT: &str = "offline://heuristic/complete";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NerKind {
    /// [`RuleNer`] over an optional rules file.
    #[default]
    Rules,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NerSettings {
    pub provider: NerKind,
    pub rules: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub rate_limit: f64,
}

impl Default for NerSettings {
    fn default() -> Self {
        NerSettings {
            provider: NerKind::Rules,
            rules: None,
            endpoint: None,
            api_key_env: None,
            rate_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    #[default]
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub provider: EmbeddingKind,
    /// Dimension of the hash embedder.
    pub dim: usize,
    pub endpoint: Option<String>,
    pub model: String,
    pub api_key_env: Option<String>,
    pub rate_limit: f64,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        EmbeddingSettings {
            provider: EmbeddingKind::Hash,
            dim: 64,
            endpoint: None,
            model: "all-MiniLM-L6-v2".into(),
            api_key_env: None,
            rate_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmKind {
    #[default]
    Http,
    /// Completions read from `fixtures/<sha256(prompt)>.txt`.
    Replay,
    /// The deterministic offline heuristic, served through the HTTP cache.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub provider: LlmKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub fixtures: Option<PathBuf>,
    pub api_key_env: Option<String>,
    pub rate_limit: f64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            provider: LlmKind::Http,
            endpoint: None,
            model: "gpt-4o".into(),
            fixtures: None,
            api_key_env: None,
            rate_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WikiSettings {
    pub api_url: String,
    /// Serve queries from a local page set instead of the network.
    pub fixture: Option<PathBuf>,
    pub rate_limit: f64,
}

impl Default for WikiSettings {
    fn default() -> Self {
        WikiSettings {
            api_url: WIKIPEDIA_API.into(),
            fixture: None,
            rate_limit: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub doubt_directive: bool,
    /// 0 for zero-shot or 3 for the sampled few-shot set.
    pub shots: usize,
    pub demo_context: bool,
    pub default_label: Label,
    /// Canonical JSON-lines corpus demonstrations are drawn from.
    pub train: Option<PathBuf>,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            doubt_directive: true,
            shots: 0,
            demo_context: false,
            default_label: Label::Verifiable,
            train: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Dataset,
    pub seed: u64,
    pub workers: usize,
    pub run_mode: RunMode,
    pub cache_root: PathBuf,
    pub context_mode: ContextMode,
    pub timeout_secs: u64,
    pub dedup_pages: bool,
    pub retrieval: RetrievalWeights,
    pub prompt: PromptSettings,
    pub wiki: WikiSettings,
    pub ner: NerSettings,
    pub embedding: EmbeddingSettings,
    pub summarizer: LlmSettings,
    pub classifier: LlmSettings,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: Dataset::CT22,
            seed: 42,
            workers: 8,
            run_mode: RunMode::Record,
            cache_root: PathBuf::from("cache"),
            context_mode: ContextMode::Summary,
            timeout_secs: 60,
            dedup_pages: false,
            retrieval: RetrievalWeights::default(),
            prompt: PromptSettings::default(),
            wiki: WikiSettings::default(),
            ner: NerSettings::default(),
            embedding: EmbeddingSettings::default(),
            summarizer: LlmSettings::default(),
            classifier: LlmSettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Confirms the built-in defaults carry the fixed retrieval parameters.
pub fn self_check() -> Result<()> {
    let d = PipelineConfig::default();
    let w = d.retrieval;
    let expected = (5, 0.8, 0.2, 0.5, 42);
    if (w.p, w.alpha, w.beta, w.theta, d.seed) != expected {
        return Err(Error::Config(format!(
            "default parameters drifted: p={} alpha={} beta={} theta={} seed={}",
            w.p, w.alpha, w.beta, w.theta, d.seed
        )));
    }
    Ok(())
}

/// Parses `value` as a TOML scalar/array, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for part in parents {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Defaults, overlaid by `file` (if any), overlaid by `key=value`
    /// overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(path) => io::read_to_string(path)?
                .parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            apply_override(&mut table, key.trim(), parse_override_value(value.trim()))?;
        }
        let mut cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.base_dir = file
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if !matches!(self.prompt.shots, 0 | 3) {
            return Err(Error::Config(format!(
                "prompt.shots must be 0 or 3, got {}",
                self.prompt.shots
            )));
        }
        if self.prompt.shots > 0 && self.prompt.train.is_none() {
            return Err(Error::Config("few-shot prompting needs prompt.train".into()));
        }
        if self.embedding.dim == 0 {
            return Err(Error::Config("embedding.dim must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn prompt_config(&self, shots: Vec<Demonstration>) -> PromptConfig {
        PromptConfig {
            augmented: self.context_mode != ContextMode::None,
            doubt_directive: self.prompt.doubt_directive,
            shots,
            demo_context: self.prompt.demo_context,
            default_label: self.prompt.default_label,
        }
    }
}

/// Optional replacements for the network backends, e.g. spies or local
/// fakes. Unset roles use the configured default.
#[derive(Default, Clone)]
pub struct Backends {
    pub wiki: Option<Arc<dyn Transport>>,
    pub ner: Option<Arc<dyn Transport>>,
    pub embedding: Option<Arc<dyn Transport>>,
    pub summarizer: Option<Arc<dyn Transport>>,
    pub classifier: Option<Arc<dyn Transport>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Extract,
    Retrieve,
    Context,
    Classify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimEntities {
    pub claim_id: String,
    pub entities: Vec<Entity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimFailure {
    pub claim_id: String,
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct StageOutput<T> {
    pub records: Vec<T>,
    pub failures: Vec<ClaimFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub claims: usize,
    pub predictions: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub corpus: ArtifactRef,
    /// Stage name to artifact, paths relative to the output directory.
    pub artifacts: BTreeMap<String, ArtifactRef>,
    pub providers: BTreeMap<String, String>,
    pub counts: RunCounts,
    /// Omitted in replay mode so replays are byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
}

/// Checks that every artifact listed in `dir/manifest.json` exists and
/// hashes to the recorded digest.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let manifest: RunManifest = serde_json::from_str(&io::read_to_string(&dir.join(MANIFEST_FILE))?)?;
    for (stage, artifact) in &manifest.artifacts {
        let path = dir.join(&artifact.path);
        let bytes = std::fs::read(&path)
            .map_err(|_| Error::Manifest(format!("{stage}: {} is missing", path.display())))?;
        let actual = sha256_hex(&bytes);
        if actual != artifact.sha256 {
            return Err(Error::Manifest(format!(
                "{stage}: {} hashes to {actual}, manifest says {}",
                path.display(),
                artifact.sha256
            )));
        }
    }
    Ok(manifest)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// A wired-up pipeline: providers, caches and the worker pool.
pub struct Pipeline {
    cfg: PipelineConfig,
    ner: Arc<dyn NerProvider>,
    lexicon: Option<DiseaseLexicon>,
    wiki: WikiClient,
    embedder: Embedder,
    summarizer: std::result::Result<Arc<dyn LlmProvider>, String>,
    classifier: std::result::Result<Arc<dyn LlmProvider>, String>,
    transports: Vec<Arc<CachingTransport>>,
    pool: rayon::ThreadPool,
}

struct Wiring<'a> {
    cfg: &'a PipelineConfig,
    cache: Option<ResponseCache>,
    network: Option<Arc<dyn Transport>>,
    transports: Vec<Arc<CachingTransport>>,
}

impl Wiring<'_> {
    fn network(&mut self) -> Result<Arc<dyn Transport>> {
        if let Some(n) = &self.network {
            return Ok(n.clone());
        }
        let t: Arc<dyn Transport> = Arc::new(ReqwestTransport::new(Duration::from_secs(self.cfg.timeout_secs))?);
        self.network = Some(t.clone());
        Ok(t)
    }

    /// Remote backends are rate limited; injected and local ones are not.
    fn transport(
        &mut self,
        name: &str,
        injected: Option<Arc<dyn Transport>>,
        local: Option<Arc<dyn Transport>>,
        rate_limit: f64,
        auth_env: Option<String>,
    ) -> Result<Arc<CachingTransport>> {
        let (backend, limiter) = match (injected, local) {
            (Some(b), _) | (None, Some(b)) => (b, RateLimiter::unlimited()),
            (None, None) => (self.network()?, RateLimiter::new(rate_limit)),
        };
        let cache = match self.cfg.run_mode {
            RunMode::Live => None,
            _ => self.cache.clone(),
        };
        let t = Arc::new(
            CachingTransport::new(name, self.cfg.run_mode, Some(backend), cache)
                .with_rate_limiter(Arc::new(limiter))
                .with_auth_env(auth_env),
        );
        self.transports.push(t.clone());
        Ok(t)
    }

    fn llm(
        &mut self,
        role: &str,
        s: &LlmSettings,
        injected: Option<Arc<dyn Transport>>,
    ) -> Result<Arc<dyn LlmProvider>> {
        match s.provider {
            LlmKind::Replay => {
                let dir = s
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{role}.fixtures is required for replay")))?;
                Ok(Arc::new(ReplayLlm::new(self.cfg.resolve(dir), &s.model)))
            }
            LlmKind::Heuristic => {
                let t = self.transport(role, injected, Some(Arc::new(HeuristicCompletions)), s.rate_limit, None)?;
                Ok(Arc::new(HttpLlm::new(HEURISTIC_ENDPOINT, &s.model, t)))
            }
            LlmKind::Http => {
                let endpoint = s
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config(format!("{role}.endpoint is required")))?;
                let t = self.transport(role, injected, None, s.rate_limit, s.api_key_env.clone())?;
                Ok(Arc::new(HttpLlm::new(endpoint, &s.model, t)))
            }
        }
    }
}

impl Pipeline {
    pub fn from_config(cfg: PipelineConfig) -> Result<Self> {
        Pipeline::with_backends(cfg, Backends::default())
    }

    pub fn with_backends(cfg: PipelineConfig, backends: Backends) -> Result<Self> {
        cfg.validate()?;
        let mut w = Wiring {
            cfg: &cfg,
            cache: Some(ResponseCache::new(cfg.resolve(&cfg.cache_root))),
            network: None,
            transports: Vec::new(),
        };

        let ner: Arc<dyn NerProvider> = match cfg.ner.provider {
            NerKind::Rules => Arc::new(match &cfg.ner.rules {
                Some(path) => RuleNer::from_file(&cfg.resolve(path))?,
                None => RuleNer::default(),
            }),
            NerKind::Http => {
                let endpoint = cfg
                    .ner
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("ner.endpoint is required".into()))?;
                let t = w.transport("ner", backends.ner.clone(), None, cfg.ner.rate_limit, cfg.ner.api_key_env.clone())?;
                Arc::new(HttpNer::new(endpoint, t))
            }
        };

        let local_wiki: Option<Arc<dyn Transport>> = match &cfg.wiki.fixture {
            Some(path) => Some(Arc::new(FixtureWiki::from_file(&cfg.resolve(path))?)),
            None => None,
        };
        let wiki_t = w.transport("wikipedia", backends.wiki.clone(), local_wiki, cfg.wiki.rate_limit, None)?;
        let wiki = WikiClient::new(&cfg.wiki.api_url, wiki_t);

        let embed_provider: Arc<dyn EmbeddingProvider> = match cfg.embedding.provider {
            EmbeddingKind::Hash => Arc::new(HashEmbedder::new(cfg.embedding.dim)),
            EmbeddingKind::Http => {
                let endpoint = cfg
                    .embedding
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("embedding.endpoint is required".into()))?;
                let t = w.transport(
                    "embedding",
                    backends.embedding.clone(),
                    None,
                    cfg.embedding.rate_limit,
                    cfg.embedding.api_key_env.clone(),
                )?;
                Arc::new(HttpEmbedder::new(endpoint, &cfg.embedding.model, t))
            }
        };

        // LLM wiring errors surface only when the role is used.
        let summarizer = w
            .llm("summarizer", &cfg.summarizer, backends.summarizer.clone())
            .map_err(|e| e.to_string());
        let classifier = w
            .llm("classifier", &cfg.classifier, backends.classifier.clone())
            .map_err(|e| e.to_string());
        let transports = w.transports;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Pipeline {
            lexicon: cfg.dataset.uses_disease_lexicon().then(DiseaseLexicon::default),
            ner,
            wiki,
            embedder: Embedder::new(embed_provider),
            summarizer,
            classifier,
            transports,
            pool,
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Requests that reached any backend, retries included.
    pub fn network_calls(&self) -> usize {
        self.transports.iter().map(|t| t.network_calls()).sum()
    }

    fn summarizer(&self) -> Result<&dyn LlmProvider> {
        self.summarizer.as_deref().map_err(|e| Error::Config(e.clone()))
    }

    fn classifier(&self) -> Result<&dyn LlmProvider> {
        self.classifier.as_deref().map_err(|e| Error::Config(e.clone()))
    }

    pub fn provider_ids(&self) -> BTreeMap<String, String> {
        let mut ids = BTreeMap::new();
        let mode = self.cfg.context_mode;
        if mode != ContextMode::None {
            ids.insert("ner".into(), self.ner.id());
            ids.insert("embedding".into(), self.embedder.provider_id());
            let wiki = match &self.cfg.wiki.fixture {
                Some(p) => format!("fixture:{}", p.display()),
                None => format!("mediawiki:{}", self.cfg.wiki.api_url),
            };
            ids.insert("wiki".into(), wiki);
        }
        if mode == ContextMode::Summary {
            if let Ok(s) = &self.summarizer {
                ids.insert("summarizer".into(), s.id());
            }
        }
        if let Ok(c) = &self.classifier {
            ids.insert("classifier".into(), c.id());
        }
        ids
    }

    /// Runs `f` over claims in the worker pool. Replay cache misses abort;
    /// any other error is recorded against its claim.
    fn par_stage<T: Send>(
        &self,
        stage: Stage,
        claims: &[&Claim],
        f: impl Fn(&Claim) -> Result<T> + Sync,
    ) -> Result<StageOutput<T>> {
        let results: Vec<Result<T>> = self.pool.install(|| claims.par_iter().map(|c| f(c)).collect());
        let mut out = StageOutput {
            records: Vec::with_capacity(results.len()),
            failures: Vec::new(),
        };
        for (claim, result) in claims.iter().zip(results) {
            match result {
                Ok(r) => out.records.push(r),
                Err(e) if e.is_cache_miss() => return Err(e),
                Err(e) => {
                    log::warn!("claim {} failed at {stage:?}: {e}", claim.id);
                    out.failures.push(ClaimFailure {
                        claim_id: claim.id.clone(),
                        stage,
                        error: e.to_string(),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn extract(&self, claims: &[&Claim]) -> Result<StageOutput<ClaimEntities>> {
        self.par_stage(Stage::Extract, claims, |c| {
            Ok(ClaimEntities {
                claim_id: c.id.clone(),
                entities: extract_entities(c, self.ner.as_ref(), self.lexicon.as_ref())?,
            })
        })
    }

    pub fn retrieve(&self, claims: &[&Claim], entities: &[ClaimEntities]) -> Result<StageOutput<KnowledgeBase>> {
        let by_id: HashMap<&str, &ClaimEntities> = entities.iter().map(|e| (e.claim_id.as_str(), e)).collect();
        let options = KbOptions {
            dedup_pages: self.cfg.dedup_pages,
        };
        self.par_stage(Stage::Retrieve, claims, |c| {
            let ents = by_id
                .get(c.id.as_str())
                .ok_or_else(|| Error::IdMismatch(format!("no entities for claim `{}`", c.id)))?;
            build_knowledge_base(c, &ents.entities, &self.wiki, &self.embedder, &self.cfg.retrieval, options)
        })
    }

    pub fn contextualize(&self, claims: &[&Claim], kbs: &[KnowledgeBase]) -> Result<StageOutput<ContextSummary>> {
        let mode = self.cfg.context_mode;
        let llm = match mode {
            ContextMode::Summary => Some(self.summarizer()?),
            _ => None,
        };
        let by_id: HashMap<&str, &KnowledgeBase> = kbs.iter().map(|k| (k.claim_id.as_str(), k)).collect();
        self.par_stage(Stage::Context, claims, |c| {
            if mode == ContextMode::None {
                return Ok(ContextSummary::none(&c.id));
            }
            let kb = by_id
                .get(c.id.as_str())
                .ok_or_else(|| Error::IdMismatch(format!("no knowledge base for claim `{}`", c.id)))?;
            materialize_context(c, kb, mode, llm)
        })
    }

    /// Demonstrations for the configured shot count.
    pub fn demonstrations(&self) -> Result<Vec<Demonstration>> {
        match (&self.cfg.prompt.train, self.cfg.prompt.shots) {
            (Some(path), n) if n > 0 => sample_few_shot(&read_corpus(&self.cfg.resolve(path))?, self.cfg.seed),
            _ => Ok(Vec::new()),
        }
    }

    pub fn classify(&self, claims: &[&Claim], contexts: &[ContextSummary]) -> Result<StageOutput<Prediction>> {
        let llm = self.classifier()?;
        let prompt = self.cfg.prompt_config(self.demonstrations()?);
        let mode = self.cfg.context_mode;
        let by_id: HashMap<&str, &ContextSummary> = contexts.iter().map(|c| (c.claim_id.as_str(), c)).collect();
        self.par_stage(Stage::Classify, claims, |c| {
            let none;
            let context = match by_id.get(c.id.as_str()) {
                Some(ctx) => *ctx,
                None if !prompt.augmented => {
                    none = ContextSummary::none(&c.id);
                    &none
                }
                None => return Err(Error::IdMismatch(format!("no context for claim `{}`", c.id))),
            };
            classify(c, context, mode, &prompt, llm)
        })
    }

    /// Runs every stage over the canonical corpus at `corpus`, writing
    /// artifacts and `manifest.json` into `out_dir`.
    pub fn run(&self, corpus: &Path, out_dir: &Path) -> Result<RunManifest> {
        let started = now_unix();
        let corpus_bytes = std::fs::read(corpus).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(corpus.to_path_buf()),
            _ => Error::io(corpus, e),
        })?;
        let mut claims = read_corpus(corpus)?;
        claims.sort_by(|a, b| a.id.cmp(&b.id));
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

        let mut artifacts = BTreeMap::new();
        let mut failures = Vec::new();
        let write = |name: &str, bytes: Vec<u8>, artifacts: &mut BTreeMap<String, ArtifactRef>| -> Result<()> {
            io::write_atomic(&out_dir.join(name), &bytes)?;
            let stage = name.trim_end_matches(".jsonl").to_string();
            artifacts.insert(
                stage,
                ArtifactRef {
                    path: name.to_string(),
                    sha256: sha256_hex(&bytes),
                },
            );
            Ok(())
        };

        let mut live: Vec<&Claim> = claims.iter().collect();
        let mode = self.cfg.context_mode;
        let mut kbs = Vec::new();
        if mode != ContextMode::None {
            let extracted = self.extract(&live)?;
            write(ENTITIES_FILE, io::to_jsonl(&extracted.records)?, &mut artifacts)?;
            live = surviving(&live, &extracted.failures);
            failures.extend(extracted.failures);

            let retrieved = self.retrieve(&live, &extracted.records)?;
            write(KNOWLEDGE_BASES_FILE, io::to_jsonl(&retrieved.records)?, &mut artifacts)?;
            live = surviving(&live, &retrieved.failures);
            failures.extend(retrieved.failures);
            kbs = retrieved.records;
        }

        let contexts = self.contextualize(&live, &kbs)?;
        write(CONTEXTS_FILE, io::to_jsonl(&contexts.records)?, &mut artifacts)?;
        live = surviving(&live, &contexts.failures);
        failures.extend(contexts.failures);

        let predictions = self.classify(&live, &contexts.records)?;
        write(PREDICTIONS_FILE, io::to_jsonl(&predictions.records)?, &mut artifacts)?;
        failures.extend(predictions.failures);

        failures.sort_by(|a, b| a.claim_id.cmp(&b.claim_id).then(a.stage.cmp(&b.stage)));
        write(FAILURES_FILE, io::to_jsonl(&failures)?, &mut artifacts)?;

        if !claims.is_empty() && predictions.records.is_empty() {
            return Err(Error::AllClaimsFailed(claims.len()));
        }

        let replay = self.cfg.run_mode == RunMode::Replay;
        let manifest = RunManifest {
            config: self.cfg.clone(),
            corpus: ArtifactRef {
                path: corpus.display().to_string(),
                sha256: sha256_hex(&corpus_bytes),
            },
            artifacts,
            providers: self.provider_ids(),
            counts: RunCounts {
                claims: claims.len(),
                predictions: predictions.records.len(),
                failures: failures.len(),
            },
            started_unix: (!replay).then_some(started),
            finished_unix: (!replay).then(now_unix),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        io::write_atomic(&out_dir.join(MANIFEST_FILE), &bytes)?;
        Ok(manifest)
    }
}

fn surviving<'a>(claims: &[&'a Claim], failures: &[ClaimFailure]) -> Vec<&'a Claim> {
    if failures.is_empty() {
        return claims.to_vec();
    }
    let failed: std::collections::HashSet<&str> = failures.iter().map(|f| f.claim_id.as_str()).collect();
    claims.iter().copied().filter(|c| !failed.contains(c.id.as_str())).collect()
}
