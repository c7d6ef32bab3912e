//! Dense similarity and the weighted relevance score used for re-ranking.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{CachingTransport, HttpRequest};
use crate::io::sha256_hex;

/// Inputs longer than this many characters are cut before embedding.
pub const EMBED_CHAR_LIMIT: usize = 1_500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("embedding has zero dimensions".into()));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    fn squared_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    let (nu, nv) = (u.squared_norm(), v.squared_norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    // One square root keeps cosine(u, u) at exactly 1.
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalWeights {
    /// Weight on extract-to-claim similarity.
    pub alpha: f64,
    /// Weight on title-to-entity similarity.
    pub beta: f64,
    /// Minimum score for MISC and DISEASE entities.
    pub theta: f64,
    /// Candidate extracts requested per entity.
    pub p: usize,
}

impl Default for RetrievalWeights {
    fn default() -> Self {
        RetrievalWeights {
            alpha: 0.8,
            beta: 0.2,
            theta: 0.5,
            p: 5,
        }
    }
}

impl RetrievalWeights {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("alpha/beta must lie in [0, 1], got {}/{}", self.alpha, self.beta));
        }
        if !(-1.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [-1, 1], got {}", self.theta));
        }
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        Ok(())
    }
}

/// `alpha * extract_sim + beta * title_sim`, unclamped.
pub fn relevance_score(extract_sim: f64, title_sim: f64, w: &RetrievalWeights) -> f64 {
    w.alpha * extract_sim + w.beta * title_sim
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> String;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

/// Offline embedder: each normalized whitespace token maps to a unit vector
/// drawn from a generator seeded by the token's SHA-256; a text embeds to
/// the mean of its token vectors.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 64 }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim }
    }

    pub fn tokens(text: &str) -> Vec<String> {
        text.split_whitespace()
            .map(|t| {
                t.trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase()
            })
            .filter(|t| !t.is_empty())
            .collect()
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let digest = Sha256::digest(token.as_bytes());
        let seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let tokens = Self::tokens(text);
        let mut acc = vec![0.0; self.dim];
        for token in &tokens {
            for (a, x) in acc.iter_mut().zip(self.token_vector(token)) {
                *a += x;
            }
        }
        if !tokens.is_empty() {
            let n = tokens.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        EmbeddingVector(acc)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-embedder:{}", self.dim)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}

/// Embeddings over HTTP: `{model, texts[]}` in, `{vectors[][]}` out.
pub struct HttpEmbedder {
    endpoint: String,
    model: String,
    transport: Arc<CachingTransport>,
}

impl HttpEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        transport: Arc<CachingTransport>,
    ) -> Self {
        HttpEmbedder {
            endpoint: endpoint.into(),
            model: model.into(),
            transport,
        }
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let req = HttpRequest::post_json(
            &self.endpoint,
            serde_json::json!({ "model": self.model, "texts": texts }),
        );
        let resp: EmbedResponse = self.transport.execute_json(&req, "embeddings")?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::MalformedPayload {
                source_name: self.id(),
                message: format!("{} vectors for {} texts", resp.vectors.len(), texts.len()),
            });
        }
        resp.vectors.into_iter().map(EmbeddingVector::new).collect()
    }
}

/// Session wrapper around a provider: truncates input, memoizes by content
/// hash and pins the dimension seen first.
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    memo: Mutex<HashMap<String, EmbeddingVector>>,
    dim: OnceLock<usize>,
}

impl Embedder {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Embedder {
            provider,
            memo: Mutex::new(HashMap::new()),
            dim: OnceLock::new(),
        }
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("cannot embed empty text".into()));
        }
        let text: String = text.chars().take(EMBED_CHAR_LIMIT).collect();
        let key = sha256_hex(text.as_bytes());
        if let Some(hit) = self.memo.lock().expect("embed cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let vector = self
            .provider
            .embed_batch(std::slice::from_ref(&text))?
            .pop()
            .ok_or_else(|| Error::MalformedPayload {
                source_name: self.provider.id(),
                message: "no vector returned".into(),
            })?;
        let expected = *self.dim.get_or_init(|| vector.dim());
        if vector.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: vector.dim(),
            });
        }
        let mut memo = self.memo.lock().expect("embed cache poisoned");
        Ok(memo.entry(key).or_insert(vector).clone())
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        cosine(&self.embed(a)?, &self.embed(b)?)
    }
}
