//! Text-generation providers used for summarization and classification.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::{CachingTransport, HttpRequest};
use crate::io::{self, sha256_hex};

/// Every pipeline call decodes greedily.
pub const PIPELINE_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl LlmRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>, max_output_tokens: u32) -> Self {
        LlmRequest {
            model: model.into(),
            prompt: prompt.into(),
            temperature: PIPELINE_TEMPERATURE,
            max_output_tokens,
        }
    }
}

pub trait LlmProvider: Send + Sync {
    /// Provider/model tag recorded alongside generated text.
    fn id(&self) -> String;
    fn model(&self) -> String;
    fn complete(&self, req: &LlmRequest) -> Result<String>;
}

/// Completion gateway: `{model, prompt, temperature, max_tokens}` in,
/// `{text}` out.
pub struct HttpLlm {
    endpoint: String,
    model: String,
    transport: Arc<CachingTransport>,
}

impl HttpLlm {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, transport: Arc<CachingTransport>) -> Self {
        HttpLlm {
            endpoint: endpoint.into(),
            model: model.into(),
            transport,
        }
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

impl LlmProvider for HttpLlm {
    fn id(&self) -> String {
        format!("http/{}", self.model)
    }

    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, req: &LlmRequest) -> Result<String> {
        let http = HttpRequest::post_json(
            &self.endpoint,
            serde_json::json!({
                "model": req.model,
                "prompt": req.prompt,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
            }),
        );
        let resp: CompletionResponse = self.transport.execute_json(&http, "completion")?;
        Ok(resp.text)
    }
}

/// Serves recorded completions from `dir/<sha256(prompt)>.txt`.
pub struct ReplayLlm {
    dir: PathBuf,
    model: String,
}

impl ReplayLlm {
    pub fn new(dir: impl Into<PathBuf>, model: impl Into<String>) -> Self {
        ReplayLlm {
            dir: dir.into(),
            model: model.into(),
        }
    }

    pub fn fixture_path(dir: &Path, prompt: &str) -> PathBuf {
        dir.join(format!("{}.txt", sha256_hex(prompt.as_bytes())))
    }

    /// Stores a completion fixture for `prompt`.
    pub fn store(dir: &Path, prompt: &str, text: &str) -> Result<()> {
        io::write_atomic(&Self::fixture_path(dir, prompt), text.as_bytes())
    }
}

impl LlmProvider for ReplayLlm {
    fn id(&self) -> String {
        format!("replay/{}", self.model)
    }

    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, req: &LlmRequest) -> Result<String> {
        let path = Self::fixture_path(&self.dir, &req.prompt);
        if !path.exists() {
            return Err(Error::CacheMiss {
                key: sha256_hex(req.prompt.as_bytes()),
                url: path.display().to_string(),
            });
        }
        io::read_to_string(&path)
    }
}

type Responder = dyn Fn(&str) -> String + Send + Sync;

/// Closure-backed provider that counts its calls. Handy for offline runs
/// and call-count assertions.
pub struct FnLlm {
    model: String,
    respond: Box<Responder>,
    calls: AtomicUsize,
}

impl FnLlm {
    pub fn new(model: impl Into<String>, respond: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        FnLlm {
            model: model.into(),
            respond: Box::new(respond),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LlmProvider for FnLlm {
    fn id(&self) -> String {
        format!("fn/{}", self.model)
    }

    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, req: &LlmRequest) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok((self.respond)(&req.prompt))
    }
}
