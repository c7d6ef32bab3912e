//! HTTP plumbing shared by every network-backed provider.
//!
//! Requests are described by [`HttpRequest`], whose canonical form (method,
//! URL with ordered query string, sorted-key JSON body) is hashed with
//! SHA-256 into a cache key. [`CachingTransport`] wraps a raw [`Transport`]
//! with the run-mode contract:
//!
//! - `record`: serve cache hits, otherwise call the network and store the
//!   response;
//! - `replay`: serve cache hits only, a miss is a hard error and the network
//!   is never touched;
//! - `live`: always call the network and store nothing.
//!
//! Network calls are rate limited and retried with exponential backoff on
//! transport errors and HTTP 429/5xx.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{sha256_hex, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub query: Vec<(String, String)>,
    pub body: Option<serde_json::Value>,
    /// Sent on the wire but excluded from the cache key.
    pub headers: Vec<(String, String)>,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>, query: &[(&str, &str)]) -> Self {
        HttpRequest {
            method: Method::Get,
            url: url.into(),
            query: query
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            body: None,
            headers: Vec::new(),
        }
    }

    pub fn post_json(url: impl Into<String>, body: serde_json::Value) -> Self {
        HttpRequest {
            method: Method::Post,
            url: url.into(),
            query: Vec::new(),
            body: Some(body),
            headers: Vec::new(),
        }
    }

    /// Query parameters form-encoded in insertion order.
    pub fn query_string(&self) -> String {
        let mut ser = url::form_urlencoded::Serializer::new(String::new());
        for (k, v) in &self.query {
            ser.append_pair(k, v);
        }
        ser.finish()
    }

    pub fn full_url(&self) -> String {
        if self.query.is_empty() {
            self.url.clone()
        } else {
            format!("{}?{}", self.url, self.query_string())
        }
    }

    pub fn canonical(&self) -> String {
        let method = match self.method {
            Method::Get => "GET",
            Method::Post => "POST",
        };
        // serde_json::Value keeps object keys sorted, so this is canonical.
        let body = self
            .body
            .as_ref()
            .map(|b| serde_json::to_string(b).expect("json value serializes"))
            .unwrap_or_default();
        format!("{method} {}\n{body}", self.full_url())
    }

    pub fn cache_key(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            body: body.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    fn is_retriable(&self) -> bool {
        self.status == 429 || (500..600).contains(&self.status)
    }
}

/// Sends one request over the wire. Transport failures should surface as
/// [`Error::Retriable`].
pub trait Transport: Send + Sync {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("contextclaim/", env!("CARGO_PKG_VERSION")))
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let mut builder = match req.method {
            Method::Get => self.client.get(req.full_url()),
            Method::Post => self.client.post(req.full_url()),
        };
        if let Some(body) = &req.body {
            builder = builder.json(body);
        }
        for (k, v) in &req.headers {
            builder = builder.header(k, v);
        }
        let resp = builder.send().map_err(|e| Error::Retriable {
            provider: req.url.clone(),
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| Error::Retriable {
            provider: req.url.clone(),
            message: e.to_string(),
        })?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Live,
    #[default]
    Record,
    Replay,
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(RunMode::Live),
            "record" => Ok(RunMode::Record),
            "replay" => Ok(RunMode::Replay),
            _ => Err(Error::InvalidArgument(format!("unknown run mode `{s}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    request: String,
    response: HttpResponse,
}

/// One JSON file per request key under `root/<key[..2]>/<key>.json`.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResponseCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<HttpResponse>> {
        let path = self.path_for(key);
        match fs::read(&path) {
            Ok(bytes) => {
                let entry: CacheEntry = serde_json::from_slice(&bytes)?;
                Ok(Some(entry.response))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn put(&self, req: &HttpRequest, resp: &HttpResponse) -> Result<()> {
        let entry = CacheEntry {
            request: req.canonical(),
            response: resp.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&entry)?;
        bytes.push(b'\n');
        write_atomic(&self.path_for(&req.cache_key()), &bytes)
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        let Ok(dirs) = fs::read_dir(&self.root) else {
            return 0;
        };
        dirs.filter_map(|d| d.ok())
            .filter_map(|d| fs::read_dir(d.path()).ok())
            .map(|entries| {
                entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Spaces calls at least `1 / requests_per_second` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Option<Duration>,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// A non-positive rate disables limiting.
    pub fn new(requests_per_second: f64) -> Self {
        let interval = (requests_per_second > 0.0)
            .then(|| Duration::from_secs_f64(1.0 / requests_per_second));
        RateLimiter {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    pub fn unlimited() -> Self {
        RateLimiter::new(0.0)
    }

    pub fn acquire(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let wait = {
            let mut next = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay_for(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

pub struct CachingTransport {
    name: String,
    mode: RunMode,
    backend: Option<Arc<dyn Transport>>,
    cache: Option<ResponseCache>,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
    auth_env: Option<String>,
    network_calls: AtomicUsize,
}

impl CachingTransport {
    pub fn new(
        name: impl Into<String>,
        mode: RunMode,
        backend: Option<Arc<dyn Transport>>,
        cache: Option<ResponseCache>,
    ) -> Self {
        CachingTransport {
            name: name.into(),
            mode,
            backend,
            cache,
            limiter: Arc::new(RateLimiter::unlimited()),
            retry: RetryPolicy::default(),
            auth_env: None,
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_rate_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Reads a bearer token from this environment variable at call time.
    pub fn with_auth_env(mut self, var: Option<String>) -> Self {
        self.auth_env = var;
        self
    }

    pub fn mode(&self) -> RunMode {
        self.mode
    }

    /// Requests that reached the backend (including retries).
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn execute(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let key = req.cache_key();
        if self.mode != RunMode::Live {
            if let Some(cache) = &self.cache {
                if let Some(hit) = cache.get(&key)? {
                    return Ok(hit);
                }
            }
        }
        if self.mode == RunMode::Replay {
            return Err(Error::CacheMiss {
                key,
                url: req.full_url(),
            });
        }
        let resp = self.send_with_retry(req)?;
        if self.mode == RunMode::Record {
            if let Some(cache) = &self.cache {
                cache.put(req, &resp)?;
            }
        }
        Ok(resp)
    }

    pub fn execute_json<T: DeserializeOwned>(&self, req: &HttpRequest, what: &str) -> Result<T> {
        let resp = self.execute(req)?;
        serde_json::from_str(&resp.body).map_err(|e| Error::MalformedPayload {
            source_name: format!("{} {what}", self.name),
            message: e.to_string(),
        })
    }

    fn send_with_retry(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let backend = self.backend.as_ref().ok_or_else(|| {
            Error::Config(format!("{}: no network backend configured", self.name))
        })?;
        let mut req = req.clone();
        if let Some(var) = &self.auth_env {
            if let Ok(token) = std::env::var(var) {
                req.headers
                    .push(("Authorization".into(), format!("Bearer {token}")));
            }
        }
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.delay_for(attempt - 1));
            }
            self.limiter.acquire();
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match backend.send(&req) {
                Ok(resp) if resp.is_success() => return Ok(resp),
                Ok(resp) if resp.is_retriable() => {
                    last = format!("HTTP {}", resp.status);
                }
                Ok(resp) => {
                    return Err(Error::Provider {
                        provider: self.name.clone(),
                        message: format!("HTTP {} from {}", resp.status, req.url),
                    })
                }
                Err(e) if e.is_retriable() => last = e.to_string(),
                Err(e) => return Err(e),
            }
            log::debug!("{}: attempt {} failed: {last}", self.name, attempt + 1);
        }
        Err(Error::Retriable {
            provider: self.name.clone(),
            message: format!("{last} after {attempts} attempts"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scripted {
        statuses: Mutex<Vec<u16>>,
        calls: AtomicUsize,
    }

    impl Transport for Scripted {
        fn send(&self, _req: &HttpRequest) -> Result<HttpResponse> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let status = self.statuses.lock().unwrap().remove(0);
            Ok(HttpResponse {
                status,
                body: "{\"ok\":true}".into(),
            })
        }
    }

    fn scripted(statuses: &[u16]) -> Arc<Scripted> {
        Arc::new(Scripted {
            statuses: Mutex::new(statuses.to_vec()),
            calls: AtomicUsize::new(0),
        })
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn search_query_string_is_stable() {
        let req = HttpRequest::get(
            "https://en.wikipedia.org/w/api.php",
            &[
                ("action", "query"),
                ("list", "search"),
                ("srsearch", "Lindsey Graham"),
                ("srlimit", "5"),
                ("format", "json"),
            ],
        );
        assert_eq!(
            req.query_string(),
            "action=query&list=search&srsearch=Lindsey+Graham&srlimit=5&format=json"
        );
        assert_eq!(req.cache_key(), req.clone().cache_key());
        let mut other = req.clone();
        other.headers.push(("Authorization".into(), "x".into()));
        assert_eq!(req.cache_key(), other.cache_key());
    }

    #[test]
    fn body_key_order_does_not_matter() {
        let a = HttpRequest::post_json("u", serde_json::json!({"b": 1, "a": 2}));
        let b = HttpRequest::post_json("u", serde_json::from_str(r#"{"a":2,"b":1}"#).unwrap());
        assert_eq!(a.cache_key(), b.cache_key());
    }

    #[test]
    fn retries_on_5xx_then_succeeds() {
        let backend = scripted(&[503, 429, 200]);
        let t = CachingTransport::new("t", RunMode::Live, Some(backend.clone()), None).with_retry(fast());
        let resp = t.execute(&HttpRequest::get("u", &[])).unwrap();
        assert_eq!(resp.status, 200);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let backend = scripted(&[500, 500, 500, 200]);
        let t = CachingTransport::new("t", RunMode::Live, Some(backend.clone()), None).with_retry(fast());
        let err = t.execute(&HttpRequest::get("u", &[])).unwrap_err();
        assert!(err.is_retriable());
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let backend = scripted(&[404]);
        let t = CachingTransport::new("t", RunMode::Live, Some(backend.clone()), None).with_retry(fast());
        assert!(matches!(t.execute(&HttpRequest::get("u", &[])), Err(Error::Provider { .. })));
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let req = HttpRequest::get("u", &[("q", "x")]);

        let backend = scripted(&[200]);
        let rec = CachingTransport::new("t", RunMode::Record, Some(backend.clone()), Some(cache.clone()));
        rec.execute(&req).unwrap();
        rec.execute(&req).unwrap();
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
        assert_eq!(cache.len(), 1);

        let spy = scripted(&[]);
        let replay = CachingTransport::new("t", RunMode::Replay, Some(spy.clone()), Some(cache.clone()));
        assert_eq!(replay.execute(&req).unwrap().body, "{\"ok\":true}");
        let miss = replay.execute(&HttpRequest::get("u", &[("q", "y")])).unwrap_err();
        assert!(miss.is_cache_miss());
        assert_eq!(spy.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn live_mode_never_writes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let backend = scripted(&[200]);
        let t = CachingTransport::new("t", RunMode::Live, Some(backend), Some(cache.clone()));
        t.execute(&HttpRequest::get("u", &[])).unwrap();
        assert!(cache.is_empty());
    }

    #[test]
    fn rate_limiter_spaces_calls() {
        let limiter = RateLimiter::new(100.0);
        let start = Instant::now();
        for _ in 0..5 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(39));
    }
}
