//! Wikipedia context retrieval: candidate extracts per entity, re-ranking by
//! weighted dense similarity, type-based filtering, and knowledge-base
//! assembly.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::Claim;
use crate::embedding::{relevance_score, Embedder, RetrievalWeights};
use crate::entity::Entity;
use crate::error::{Error, Result};
use crate::http::{CachingTransport, HttpRequest};

pub const WIKIPEDIA_API: &str = "https://en.wikipedia.org/w/api.php";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub title: String,
    pub page_id: u64,
}

/// MediaWiki client issuing the search and intro-extract queries.
pub struct WikiClient {
    api_url: String,
    transport: Arc<CachingTransport>,
}

impl WikiClient {
    pub fn new(api_url: impl Into<String>, transport: Arc<CachingTransport>) -> Self {
        WikiClient {
            api_url: api_url.into(),
            transport,
        }
    }

    pub fn search_request(&self, query: &str, limit: usize) -> HttpRequest {
        let limit = limit.to_string();
        HttpRequest::get(
            &self.api_url,
            &[
                ("action", "query"),
                ("list", "search"),
                ("srsearch", query),
                ("srlimit", &limit),
                ("format", "json"),
            ],
        )
    }

    pub fn extract_request(&self, page_id: u64) -> HttpRequest {
        let id = page_id.to_string();
        HttpRequest::get(
            &self.api_url,
            &[
                ("action", "query"),
                ("prop", "extracts"),
                ("exintro", "1"),
                ("explaintext", "1"),
                ("pageids", &id),
                ("format", "json"),
            ],
        )
    }

    pub fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchHit>> {
        let body: Value = self
            .transport
            .execute_json(&self.search_request(query, limit), "search")?;
        let malformed = |m: &str| Error::MalformedPayload {
            source_name: "wikipedia search".into(),
            message: m.to_string(),
        };
        let hits = body
            .get("query")
            .and_then(|q| q.get("search"))
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("missing query.search"))?;
        hits.iter()
            .map(|h| {
                Ok(SearchHit {
                    title: h
                        .get("title")
                        .and_then(Value::as_str)
                        .ok_or_else(|| malformed("search hit without title"))?
                        .to_string(),
                    page_id: h
                        .get("pageid")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| malformed("search hit without pageid"))?,
                })
            })
            .collect()
    }

    /// Plain-text intro extract; empty for pages without one.
    pub fn extract(&self, page_id: u64) -> Result<String> {
        let body: Value = self
            .transport
            .execute_json(&self.extract_request(page_id), "extract")?;
        let page = body
            .get("query")
            .and_then(|q| q.get("pages"))
            .and_then(|p| p.get(page_id.to_string()))
            .ok_or_else(|| Error::MalformedPayload {
                source_name: "wikipedia extract".into(),
                message: format!("missing query.pages.{page_id}"),
            })?;
        Ok(page
            .get("extract")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateExtract {
    pub entity: Entity,
    pub title: String,
    pub extract_text: String,
    pub page_id: u64,
    /// Position in the search results, starting at 0.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExtract {
    pub candidate: CandidateExtract,
    pub extract_sim: f64,
    pub title_sim: f64,
    pub score: f64,
}

impl ScoredExtract {
    pub fn new(candidate: CandidateExtract, extract_sim: f64, title_sim: f64, w: &RetrievalWeights) -> Self {
        ScoredExtract {
            candidate,
            extract_sim,
            title_sim,
            score: relevance_score(extract_sim, title_sim, w),
        }
    }

    pub fn recompute_score(&self, w: &RetrievalWeights) -> f64 {
        relevance_score(self.extract_sim, self.title_sim, w)
    }

    pub fn entity(&self) -> &Entity {
        &self.candidate.entity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NoCandidates,
    EmptyExtracts,
    BelowThreshold,
    FetchFailed,
    /// Only produced when page deduplication is switched on.
    DuplicatePage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedEntity {
    pub entity: Entity,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub claim_id: String,
    pub selected: Vec<ScoredExtract>,
    pub dropped: Vec<DroppedEntity>,
}

impl KnowledgeBase {
    pub fn empty(claim_id: impl Into<String>) -> Self {
        KnowledgeBase {
            claim_id: claim_id.into(),
            selected: Vec::new(),
            dropped: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Up to `p` candidates for an entity, in search-rank order.
pub fn fetch_candidates(entity: &Entity, client: &WikiClient, p: usize) -> Result<Vec<CandidateExtract>> {
    if entity.surface.trim().is_empty() {
        return Err(Error::InvalidArgument("entity surface is empty".into()));
    }
    let hits = client.search(&entity.surface, p)?;
    hits.into_iter()
        .take(p)
        .enumerate()
        .map(|(rank, hit)| {
            Ok(CandidateExtract {
                entity: entity.clone(),
                extract_text: client.extract(hit.page_id)?,
                title: hit.title,
                page_id: hit.page_id,
                rank,
            })
        })
        .collect()
}

/// Higher score first, then lower rank, then lexicographic title.
fn better(a: &ScoredExtract, b: &ScoredExtract) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.candidate.rank.cmp(&b.candidate.rank))
        .then_with(|| a.candidate.title.cmp(&b.candidate.title))
}

/// Index of the best-scoring extract under the tie-break rules.
pub fn argmax_index(scored: &[ScoredExtract]) -> Option<usize> {
    (0..scored.len()).min_by(|&i, &j| better(&scored[i], &scored[j]))
}

/// Scores every non-empty candidate and returns the best one.
pub fn select_best(
    claim: &Claim,
    candidates: &[CandidateExtract],
    embedder: &Embedder,
    weights: &RetrievalWeights,
) -> Result<Option<ScoredExtract>> {
    let mut scored = Vec::new();
    for candidate in candidates.iter().filter(|c| !c.extract_text.trim().is_empty()) {
        let extract_sim = embedder.similarity(&candidate.extract_text, &claim.text)?;
        let title_sim = embedder.similarity(&candidate.title, &candidate.entity.surface)?;
        scored.push(ScoredExtract::new(candidate.clone(), extract_sim, title_sim, weights));
    }
    Ok(argmax_index(&scored).map(|i| scored.swap_remove(i)))
}

/// Core types always pass; MISC and DISEASE need `score >= theta`.
pub fn passes_type_filter(extract: &ScoredExtract, weights: &RetrievalWeights) -> bool {
    extract.entity().etype.is_core() || extract.score >= weights.theta
}

pub fn filter_by_type(selected: Vec<ScoredExtract>, weights: &RetrievalWeights) -> Vec<ScoredExtract> {
    selected
        .into_iter()
        .filter(|s| passes_type_filter(s, weights))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbOptions {
    /// Keep only the first entity that resolves to a given page.
    pub dedup_pages: bool,
}

/// Builds the knowledge base for one claim. Per-entity failures are
/// recorded in `dropped`; only replay cache misses abort.
pub fn build_knowledge_base(
    claim: &Claim,
    entities: &[Entity],
    client: &WikiClient,
    embedder: &Embedder,
    weights: &RetrievalWeights,
    options: KbOptions,
) -> Result<KnowledgeBase> {
    let mut kb = KnowledgeBase::empty(&claim.id);
    let mut pages = HashSet::new();
    for entity in entities {
        let mut drop = |reason| {
            kb.dropped.push(DroppedEntity {
                entity: entity.clone(),
                reason,
            })
        };
        let candidates = match fetch_candidates(entity, client, weights.p) {
            Ok(c) => c,
            Err(e) if e.is_cache_miss() => return Err(e),
            Err(e) => {
                log::warn!("claim {}: fetching `{}` failed: {e}", claim.id, entity.surface);
                drop(DropReason::FetchFailed);
                continue;
            }
        };
        if candidates.is_empty() {
            drop(DropReason::NoCandidates);
            continue;
        }
        let best = match select_best(claim, &candidates, embedder, weights) {
            Ok(Some(best)) => best,
            Ok(None) => {
                drop(DropReason::EmptyExtracts);
                continue;
            }
            Err(e) if e.is_cache_miss() => return Err(e),
            Err(e) => {
                log::warn!("claim {}: scoring `{}` failed: {e}", claim.id, entity.surface);
                drop(DropReason::FetchFailed);
                continue;
            }
        };
        if !passes_type_filter(&best, weights) {
            drop(DropReason::BelowThreshold);
            continue;
        }
        if options.dedup_pages && !pages.insert(best.candidate.page_id) {
            drop(DropReason::DuplicatePage);
            continue;
        }
        kb.selected.push(best);
    }
    Ok(kb)
}
