//! Entity extraction: a pluggable NER provider plus the exact-match disease
//! lexicon used for the COVID-19 corpus.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Claim;
use crate::error::{Error, Result};
use crate::http::{CachingTransport, HttpRequest};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
    Disease,
}

impl EntityType {
    /// Core types are kept regardless of retrieval score.
    pub fn is_core(self) -> bool {
        matches!(self, EntityType::Per | EntityType::Loc | EntityType::Org)
    }

    /// Maps an NER tag onto the standard four types. `DISEASE` is never
    /// accepted from a provider.
    pub fn from_ner_tag(tag: &str) -> Option<Self> {
        let tag = tag.trim().to_ascii_uppercase();
        let tag = tag
            .strip_prefix("B-")
            .or_else(|| tag.strip_prefix("I-"))
            .unwrap_or(&tag);
        match tag {
            "PER" | "PERSON" => Some(EntityType::Per),
            "LOC" | "LOCATION" | "GPE" => Some(EntityType::Loc),
            "ORG" | "ORGANIZATION" => Some(EntityType::Org),
            "MISC" => Some(EntityType::Misc),
            _ => None,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Misc => "MISC",
            EntityType::Disease => "DISEASE",
        })
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("disease") {
            return Ok(EntityType::Disease);
        }
        EntityType::from_ner_tag(s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown entity type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntitySource {
    Ner,
    Lexicon,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub etype: EntityType,
    pub source: EntitySource,
}

impl Entity {
    pub fn ner(surface: impl Into<String>, etype: EntityType) -> Self {
        Entity {
            surface: surface.into(),
            etype,
            source: EntitySource::Ner,
        }
    }

    fn dedup_key(&self) -> (String, EntityType) {
        (self.surface.to_lowercase(), self.etype)
    }
}

/// A tagged span as returned by an NER backend. Offsets are byte offsets
/// into the claim text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerSpan {
    pub surface: String,
    #[serde(rename = "type")]
    pub tag: String,
    pub start: usize,
    pub end: usize,
}

pub trait NerProvider: Send + Sync {
    fn id(&self) -> String;
    fn tag(&self, text: &str) -> Result<Vec<NerSpan>>;
}

/// NER over HTTP: `{text}` in, `{entities: [{surface, type, start, end}]}` out.
pub struct HttpNer {
    endpoint: String,
    transport: Arc<CachingTransport>,
}

impl HttpNer {
    pub fn new(endpoint: impl Into<String>, transport: Arc<CachingTransport>) -> Self {
        HttpNer {
            endpoint: endpoint.into(),
            transport,
        }
    }
}

#[derive(Deserialize)]
struct NerResponse {
    entities: Vec<NerSpan>,
}

impl NerProvider for HttpNer {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn tag(&self, text: &str) -> Result<Vec<NerSpan>> {
        let req = HttpRequest::post_json(&self.endpoint, serde_json::json!({ "text": text }));
        let resp: NerResponse = self.transport.execute_json(&req, "ner")?;
        Ok(resp.entities)
    }
}

/// Deterministic offline tagger driven by a `{pattern: type}` table.
///
/// Patterns are literal phrases matched case-sensitively on word
/// boundaries, longest first, without overlaps.
#[derive(Debug, Clone, Default)]
pub struct RuleNer {
    rules: Vec<(String, String)>,
}

impl RuleNer {
    pub fn new<I, S, T>(rules: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut rules: Vec<(String, String)> = rules
            .into_iter()
            .map(|(p, t)| (p.into(), t.into()))
            .filter(|(p, _)| !p.is_empty())
            .collect();
        rules.sort_by(|a, b| {
            b.0.chars()
                .count()
                .cmp(&a.0.chars().count())
                .then_with(|| a.0.cmp(&b.0))
        });
        RuleNer { rules }
    }

    /// Loads a JSON object mapping pattern to type.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let map: std::collections::BTreeMap<String, String> = serde_json::from_str(&text)?;
        Ok(RuleNer::new(map))
    }
}

impl NerProvider for RuleNer {
    fn id(&self) -> String {
        format!("rules:{}", self.rules.len())
    }

    fn tag(&self, text: &str) -> Result<Vec<NerSpan>> {
        let matches = scan_terms(text, self.rules.iter().map(|(p, _)| p.as_str()), false);
        Ok(matches
            .into_iter()
            .map(|(start, end, idx)| NerSpan {
                surface: text[start..end].to_string(),
                tag: self.rules[idx].1.clone(),
                start,
                end,
            })
            .collect())
    }
}

/// Finds non-overlapping, word-bounded occurrences of `terms` in `text`.
///
/// At each position the first matching term wins, so callers pass terms
/// longest first. Returns `(start, end, term_index)` byte ranges.
fn scan_terms<'a>(
    text: &str,
    terms: impl Iterator<Item = &'a str>,
    case_insensitive: bool,
) -> Vec<(usize, usize, usize)> {
    let fold = |c: char| -> char {
        if case_insensitive {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        } else {
            c
        }
    };
    let chars: Vec<(usize, char)> = text.char_indices().map(|(i, c)| (i, fold(c))).collect();
    let terms: Vec<Vec<char>> = terms.map(|t| t.chars().map(fold).collect()).collect();
    let is_word = |c: char| c.is_alphanumeric() || c == '_';

    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || !is_word(chars[i - 1].1);
        let mut matched = None;
        if at_boundary {
            for (t, term) in terms.iter().enumerate() {
                let end = i + term.len();
                if term.is_empty() || end > chars.len() {
                    continue;
                }
                if chars[i..end].iter().map(|(_, c)| *c).eq(term.iter().copied())
                    && (end == chars.len() || !is_word(chars[end].1))
                {
                    matched = Some((t, end));
                    break;
                }
            }
        }
        match matched {
            Some((t, end)) => {
                let start_byte = chars[i].0;
                let end_byte = chars.get(end).map(|(b, _)| *b).unwrap_or(text.len());
                out.push((start_byte, end_byte, t));
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// Lowercase disease terms matched verbatim in claims.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseLexicon {
    terms: Vec<String>,
}

impl Default for DiseaseLexicon {
    fn default() -> Self {
        DiseaseLexicon::new(["covid-19", "coronavirus", "corona virus", "sars-cov-2", "covid"])
            .expect("default lexicon is non-empty")
    }
}

impl DiseaseLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: Vec<String> = terms
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::InvalidArgument("disease lexicon is empty".into()));
        }
        Ok(DiseaseLexicon { terms })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    fn longest_first(&self) -> Vec<&str> {
        let mut terms: Vec<&str> = self.terms.iter().map(String::as_str).collect();
        terms.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        terms
    }
}

fn ner_positioned(claim: &Claim, provider: &dyn NerProvider) -> Result<Vec<(usize, Entity)>> {
    let mut spans = provider.tag(&claim.text).map_err(|e| e.for_claim(&claim.id))?;
    spans.sort_by_key(|s| (s.start, s.end));
    Ok(spans
        .into_iter()
        .filter_map(|s| {
            let etype = EntityType::from_ner_tag(&s.tag)?;
            let surface = s.surface.trim();
            (!surface.is_empty()).then(|| (s.start, Entity::ner(surface, etype)))
        })
        .collect())
}

fn lexicon_positioned(claim: &Claim, lexicon: &DiseaseLexicon) -> Vec<(usize, Entity)> {
    let terms = lexicon.longest_first();
    let mut seen = HashSet::new();
    scan_terms(&claim.text, terms.iter().copied(), true)
        .into_iter()
        .filter(|(_, _, t)| seen.insert(*t))
        .map(|(start, _, t)| {
            (
                start,
                Entity {
                    surface: terms[t].to_string(),
                    etype: EntityType::Disease,
                    source: EntitySource::Lexicon,
                },
            )
        })
        .collect()
}

/// Runs the provider and keeps PER/LOC/ORG/MISC spans, ordered by span start.
pub fn ner_extract(claim: &Claim, provider: &dyn NerProvider) -> Result<Vec<Entity>> {
    Ok(ner_positioned(claim, provider)?
        .into_iter()
        .map(|(_, e)| e)
        .collect())
}

/// One DISEASE entity per distinct lexicon term found in the claim.
pub fn lexicon_match(claim: &Claim, lexicon: &DiseaseLexicon) -> Vec<Entity> {
    lexicon_positioned(claim, lexicon)
        .into_iter()
        .map(|(_, e)| e)
        .collect()
}

/// NER entities plus lexicon matches, deduplicated by lowercased surface
/// and type, in claim order.
pub fn extract_entities(
    claim: &Claim,
    provider: &dyn NerProvider,
    lexicon: Option<&DiseaseLexicon>,
) -> Result<Vec<Entity>> {
    let mut all = ner_positioned(claim, provider)?;
    if let Some(lexicon) = lexicon {
        all.extend(lexicon_positioned(claim, lexicon));
    }
    // Stable: NER entries stay ahead of lexicon entries at equal offsets.
    all.sort_by_key(|(start, _)| *start);
    let mut seen = HashSet::new();
    Ok(all
        .into_iter()
        .map(|(_, e)| e)
        .filter(|e| seen.insert(e.dedup_key()))
        .collect())
}
