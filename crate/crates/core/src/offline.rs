//! Deterministic stand-ins for network services so the whole pipeline can
//! run without credentials: a MediaWiki-shaped transport over a local page
//! set and a rule-of-thumb LLM.

use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::http::{HttpRequest, HttpResponse, Method, Transport};
use crate::io;
use crate::llm::FnLlm;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixturePage {
    pub pageid: u64,
    pub title: String,
    #[serde(default)]
    pub extract: String,
}

/// Answers `list=search` and `prop=extracts` queries from a fixed page set.
///
/// Search ranks pages by lowercase word overlap between the query and the
/// title (weighted double) plus the extract, dropping pages with no overlap.
/// Ties go to the lower page id.
pub struct FixtureWiki {
    pages: Vec<FixturePage>,
}

fn words(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl FixtureWiki {
    pub fn new(pages: Vec<FixturePage>) -> Self {
        FixtureWiki { pages }
    }

    /// Loads a JSON array of `{pageid, title, extract}`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        Ok(FixtureWiki::new(serde_json::from_str(&text)?))
    }

    pub fn pages(&self) -> &[FixturePage] {
        &self.pages
    }

    pub fn rank(&self, query: &str, limit: usize) -> Vec<&FixturePage> {
        let q = words(query);
        let mut scored: Vec<(usize, &FixturePage)> = self
            .pages
            .iter()
            .map(|p| {
                let title = words(&p.title).intersection(&q).count();
                let body = words(&p.extract).intersection(&q).count();
                (2 * title + body, p)
            })
            .filter(|(s, _)| *s > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.pageid.cmp(&b.1.pageid)));
        scored.into_iter().take(limit).map(|(_, p)| p).collect()
    }

    fn answer(&self, req: &HttpRequest) -> Result<serde_json::Value> {
        let param = |k: &str| req.query.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        if param("list") == Some("search") {
            let query = param("srsearch").unwrap_or_default();
            let limit = param("srlimit").and_then(|l| l.parse().ok()).unwrap_or(10);
            let hits: Vec<_> = self
                .rank(query, limit)
                .into_iter()
                .map(|p| json!({"ns": 0, "title": p.title, "pageid": p.pageid}))
                .collect();
            return Ok(json!({"batchcomplete": "", "query": {"search": hits}}));
        }
        if param("prop") == Some("extracts") {
            let id: u64 = param("pageids")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("extract query without pageids".into()))?;
            let page = match self.pages.iter().find(|p| p.pageid == id) {
                Some(p) => json!({"pageid": p.pageid, "ns": 0, "title": p.title, "extract": p.extract}),
                None => json!({"ns": 0, "missing": ""}),
            };
            return Ok(json!({"batchcomplete": "", "query": {"pages": {id.to_string(): page}}}));
        }
        Err(Error::InvalidArgument(format!("unsupported query {}", req.full_url())))
    }
}

impl Transport for FixtureWiki {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse> {
        if req.method != Method::Get {
            return Ok(HttpResponse {
                status: 405,
                body: String::new(),
            });
        }
        match self.answer(req) {
            Ok(body) => Ok(HttpResponse::ok(body.to_string())),
            Err(e) => Ok(HttpResponse {
                status: 400,
                body: e.to_string(),
            }),
        }
    }
}

const QUERY_MARKER: &str = "### Input text: ";
const RESPONSE_MARKER: &str = "### Response:";
const CONTEXT_MARKER: &str = "Relevant Context: ";

/// The last `### Input text:` line of a detection prompt.
fn query_claim(prompt: &str) -> Option<&str> {
    let start = prompt.rfind(QUERY_MARKER)? + QUERY_MARKER.len();
    let rest = &prompt[start..];
    Some(rest.lines().next().unwrap_or_default())
}

/// Heuristic verdict: statements with numbers, or with two or more
/// capitalized words past the first, read as checkable.
pub fn heuristic_verdict(claim: &str) -> &'static str {
    let has_number = claim.chars().any(|c| c.is_ascii_digit());
    let capitals = claim
        .split_whitespace()
        .skip(1)
        .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
        .count();
    let question = claim.trim_end().ends_with('?');
    if !question && (has_number || capitals >= 2) {
        "Yes"
    } else {
        "No"
    }
}

/// First sentences of the context block, up to roughly 150 words.
fn heuristic_summary(prompt: &str) -> String {
    let Some(start) = prompt.find(CONTEXT_MARKER) else {
        return String::new();
    };
    let body = &prompt[start + CONTEXT_MARKER.len()..];
    let body = body.rsplit_once("\nGenerate").map_or(body, |(b, _)| b);
    body.split_whitespace().take(150).collect::<Vec<_>>().join(" ")
}

/// A deterministic LLM for offline runs. Summary prompts get an extractive
/// summary; detection prompts get a `Yes`/`No` from [`heuristic_verdict`].
pub fn heuristic_llm(model: &str) -> FnLlm {
    FnLlm::new(model, heuristic_complete)
}

fn heuristic_complete(prompt: &str) -> String {
    if prompt.trim_end().ends_with(RESPONSE_MARKER) {
        heuristic_verdict(query_claim(prompt).unwrap_or_default()).to_string()
    } else {
        heuristic_summary(prompt)
    }
}

/// Completion endpoint speaking the `{model, prompt, ...}` to `{text}`
/// protocol of [`crate::llm::HttpLlm`], backed by the heuristic LLM. Routing
/// it through a caching transport gives offline runs record/replay.
#[derive(Debug, Default, Clone, Copy)]
pub struct HeuristicCompletions;

impl Transport for HeuristicCompletions {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let Some(prompt) = req.body.as_ref().and_then(|b| b.get("prompt")).and_then(|p| p.as_str()) else {
            return Ok(HttpResponse {
                status: 400,
                body: "missing prompt".into(),
            });
        };
        Ok(HttpResponse::ok(json!({ "text": heuristic_complete(prompt) }).to_string()))
    }
}

/// Counts requests before delegating.
pub struct SpyTransport {
    inner: Arc<dyn Transport>,
    calls: AtomicUsize,
}

impl SpyTransport {
    pub fn new(inner: Arc<dyn Transport>) -> Self {
        SpyTransport {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for SpyTransport {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.send(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmProvider, LlmRequest};

    fn wiki() -> FixtureWiki {
        FixtureWiki::new(vec![
            FixturePage {
                pageid: 7,
                title: "Lindsey Graham".into(),
                extract: "Lindsey Olin Graham is an American politician.".into(),
            },
            FixturePage {
                pageid: 3,
                title: "Graham cracker".into(),
                extract: "A sweet cracker.".into(),
            },
            FixturePage {
                pageid: 9,
                title: "Empty page".into(),
                extract: String::new(),
            },
        ])
    }

    #[test]
    fn search_ranks_by_overlap() {
        let w = wiki();
        let ids: Vec<u64> = w.rank("Lindsey Graham", 5).iter().map(|p| p.pageid).collect();
        assert_eq!(ids, vec![7, 3]);
        assert!(w.rank("zebra", 5).is_empty());
    }

    #[test]
    fn serves_mediawiki_shapes() {
        let w = wiki();
        let req = HttpRequest::get("x", &[("action", "query"), ("list", "search"), ("srsearch", "graham"), ("srlimit", "1")]);
        let body: serde_json::Value = serde_json::from_str(&w.send(&req).unwrap().body).unwrap();
        assert_eq!(body["query"]["search"][0]["pageid"], 7);
        let req = HttpRequest::get("x", &[("prop", "extracts"), ("pageids", "7")]);
        let body: serde_json::Value = serde_json::from_str(&w.send(&req).unwrap().body).unwrap();
        assert_eq!(body["query"]["pages"]["7"]["title"], "Lindsey Graham");
    }

    #[test]
    fn heuristic_llm_answers_both_prompts() {
        let llm = heuristic_llm("h");
        let verdict = llm
            .complete(&LlmRequest::new("h", "### Input text: x\n### Response: No\n\n### Input text: 5 million doses shipped\n### Response:", 16))
            .unwrap();
        assert_eq!(verdict, "Yes");
        let summary = llm
            .complete(&LlmRequest::new("h", "Input claim: \"c\"\nRelevant Context: A: one two\nGenerate a summary.", 400))
            .unwrap();
        assert_eq!(summary, "A: one two");
    }
}
