//! Context materialization: the sentinel for empty context, raw extract
//! concatenation, or an LLM-written summary of the knowledge base.

use serde::{Deserialize, Serialize};

use crate::dataset::Claim;
use crate::error::{Error, Result};
use crate::llm::{LlmProvider, LlmRequest};
use crate::wiki::KnowledgeBase;

/// Text used whenever no context is available.
pub const NO_CONTEXT_SENTINEL: &str = "No additional context retrieved.";

/// Maximum characters of extract text carried into a prompt.
pub const KB_CHAR_CAP: usize = 6_000;

pub const SUMMARY_MAX_TOKENS: u32 = 400;

/// Summaries outside this word range are logged, not rejected.
pub const SUMMARY_WORD_RANGE: (usize, usize) = (100, 220);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    #[default]
    None,
    Raw,
    Summary,
}

impl std::str::FromStr for ContextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "baseline" => Ok(ContextMode::None),
            "raw" => Ok(ContextMode::Raw),
            "summary" => Ok(ContextMode::Summary),
            _ => Err(Error::InvalidArgument(format!("unknown context mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for ContextMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ContextMode::None => "none",
            ContextMode::Raw => "raw",
            ContextMode::Summary => "summary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSummary {
    pub claim_id: String,
    pub text: String,
    pub generator_id: String,
    pub source_mode: ContextMode,
    pub char_budget_used: usize,
}

impl ContextSummary {
    pub fn none(claim_id: impl Into<String>) -> Self {
        ContextSummary {
            claim_id: claim_id.into(),
            text: NO_CONTEXT_SENTINEL.to_string(),
            generator_id: "none".into(),
            source_mode: ContextMode::None,
            char_budget_used: 0,
        }
    }
}

/// Cuts `text` to at most `budget` characters, backing off to the last
/// whitespace when the cut would split a word.
pub fn truncate_at_word(text: &str, budget: usize) -> &str {
    let Some((cut, next)) = text.char_indices().nth(budget) else {
        return text;
    };
    let prefix = &text[..cut];
    if next.is_whitespace() {
        return prefix.trim_end();
    }
    match prefix.rfind(char::is_whitespace) {
        Some(ws) => prefix[..ws].trim_end(),
        None => prefix,
    }
}

/// Shrinks extracts proportionally so their combined length fits `cap`.
pub fn apportion<'a>(texts: &[&'a str], cap: usize) -> Vec<&'a str> {
    let lens: Vec<usize> = texts.iter().map(|t| t.chars().count()).collect();
    let total: usize = lens.iter().sum();
    if total <= cap {
        return texts.to_vec();
    }
    texts
        .iter()
        .zip(&lens)
        .map(|(t, &len)| {
            let budget = (cap as u128 * len as u128 / total as u128) as usize;
            truncate_at_word(t, budget)
        })
        .collect()
}

/// Title-prefixed extracts separated by blank lines, capped at
/// [`KB_CHAR_CAP`]. Returns the block and the extract characters used.
pub fn render_context_block(kb: &KnowledgeBase) -> (String, usize) {
    let texts: Vec<&str> = kb
        .selected
        .iter()
        .map(|s| s.candidate.extract_text.trim())
        .collect();
    let cut = apportion(&texts, KB_CHAR_CAP);
    let used = cut.iter().map(|t| t.chars().count()).sum();
    let block = kb
        .selected
        .iter()
        .zip(cut)
        .map(|(s, text)| format!("{}: {}", s.candidate.title, text))
        .collect::<Vec<_>>()
        .join("\n\n");
    (block, used)
}

pub fn render_summary_prompt(claim: &Claim, kb: &KnowledgeBase) -> Result<String> {
    if kb.is_empty() {
        return Err(Error::EmptyKnowledgeBase(claim.id.clone()));
    }
    let (block, _) = render_context_block(kb);
    Ok(format!(
        "You are a helpful assistant. Provide a factual summarization around 150 words.\n\
         Input claim: \"{}\"\n\
         Relevant Context: {}\n\
         Generate a concise, objective summary to the provided claim based ONLY on the provided context.",
        claim.text, block
    ))
}

pub fn summarize(claim: &Claim, kb: &KnowledgeBase, llm: &dyn LlmProvider) -> Result<ContextSummary> {
    let prompt = render_summary_prompt(claim, kb)?;
    let (_, used) = render_context_block(kb);
    let req = LlmRequest::new(llm.model(), prompt, SUMMARY_MAX_TOKENS);
    let text = llm.complete(&req).map_err(|e| e.for_claim(&claim.id))?;
    if text.trim().is_empty() {
        return Err(Error::SummarizationFailed(claim.id.clone()));
    }
    let words = text.split_whitespace().count();
    if !(SUMMARY_WORD_RANGE.0..=SUMMARY_WORD_RANGE.1).contains(&words) {
        log::info!("claim {}: summary has {words} words", claim.id);
    }
    Ok(ContextSummary {
        claim_id: claim.id.clone(),
        text,
        generator_id: llm.id(),
        source_mode: ContextMode::Summary,
        char_budget_used: used,
    })
}

/// Produces the context handed to the classifier for `mode`. An empty
/// knowledge base always yields the sentinel.
pub fn materialize_context(
    claim: &Claim,
    kb: &KnowledgeBase,
    mode: ContextMode,
    llm: Option<&dyn LlmProvider>,
) -> Result<ContextSummary> {
    if mode == ContextMode::Summary && llm.is_none() {
        return Err(Error::Config("summary mode needs a summarizer".into()));
    }
    if mode == ContextMode::None {
        return Ok(ContextSummary::none(&claim.id));
    }
    if kb.is_empty() {
        log::info!("claim {}: empty knowledge base, using sentinel context", claim.id);
        return Ok(ContextSummary::none(&claim.id));
    }
    match (mode, llm) {
        (ContextMode::Summary, Some(llm)) => summarize(claim, kb, llm),
        _ => {
            let (text, used) = render_context_block(kb);
            Ok(ContextSummary {
                claim_id: claim.id.clone(),
                text,
                generator_id: "raw".into(),
                source_mode: ContextMode::Raw,
                char_budget_used: used,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Split};
    use crate::entity::{Entity, EntityType};
    use crate::llm::FnLlm;
    use crate::wiki::{CandidateExtract, ScoredExtract};

    fn claim() -> Claim {
        Claim::new("c1", "Lindsey Graham got a vaccine", Dataset::CT22, Split::Test, None).unwrap()
    }

    fn kb(extracts: &[(&str, &str)]) -> KnowledgeBase {
        KnowledgeBase {
            claim_id: "c1".into(),
            selected: extracts
                .iter()
                .enumerate()
                .map(|(i, (title, text))| ScoredExtract {
                    candidate: CandidateExtract {
                        entity: Entity::ner(*title, EntityType::Per),
                        title: title.to_string(),
                        extract_text: text.to_string(),
                        page_id: i as u64,
                        rank: 0,
                    },
                    extract_sim: 0.5,
                    title_sim: 1.0,
                    score: 0.6,
                })
                .collect(),
            dropped: Vec::new(),
        }
    }

    #[test]
    fn truncation_respects_words() {
        assert_eq!(truncate_at_word("hello world", 20), "hello world");
        assert_eq!(truncate_at_word("hello world", 5), "hello");
        assert_eq!(truncate_at_word("hello world", 8), "hello");
        assert_eq!(truncate_at_word("helloworld", 4), "hell");
    }

    #[test]
    fn two_long_extracts_share_the_cap() {
        let long = "abcd ".repeat(800); // 4000 chars
        let cut = apportion(&[&long, &long], KB_CHAR_CAP);
        for t in &cut {
            assert!(t.chars().count() <= 3000);
            assert!(t.chars().count() >= 2995);
        }
    }

    #[test]
    fn empty_kb_prompt_is_an_error() {
        assert!(matches!(
            render_summary_prompt(&claim(), &kb(&[])),
            Err(Error::EmptyKnowledgeBase(_))
        ));
    }

    #[test]
    fn raw_mode_joins_titles_without_calls() {
        let spy = FnLlm::new("spy", |_| "unused".into());
        let k = kb(&[("Lindsey Graham", "Senator."), ("Vaccine", "A vaccine is...")]);
        let c = materialize_context(&claim(), &k, ContextMode::Raw, Some(&spy)).unwrap();
        assert_eq!(c.text, "Lindsey Graham: Senator.\n\nVaccine: A vaccine is...");
        assert_eq!(c.source_mode, ContextMode::Raw);
        let n = materialize_context(&claim(), &k, ContextMode::None, Some(&spy)).unwrap();
        assert_eq!(n.text, NO_CONTEXT_SENTINEL);
        assert_eq!(spy.calls(), 0);
    }

    #[test]
    fn summary_on_empty_kb_falls_back() {
        let spy = FnLlm::new("spy", |_| "unused".into());
        let c = materialize_context(&claim(), &kb(&[]), ContextMode::Summary, Some(&spy)).unwrap();
        assert_eq!(c.source_mode, ContextMode::None);
        assert_eq!(c.text, NO_CONTEXT_SENTINEL);
        assert_eq!(spy.calls(), 0);
        assert!(materialize_context(&claim(), &kb(&[]), ContextMode::Summary, None).is_err());
    }

    #[test]
    fn blank_summary_fails() {
        let blank = FnLlm::new("blank", |_| "  \n".into());
        let err = summarize(&claim(), &kb(&[("A", "b")]), &blank).unwrap_err();
        assert!(matches!(err, Error::SummarizationFailed(ref id) if id == "c1"));
    }

    #[test]
    fn summary_is_recorded_verbatim() {
        let llm = FnLlm::new("m", |_| " Graham is a US senator. ".into());
        let s = summarize(&claim(), &kb(&[("Lindsey Graham", "Senator.")]), &llm).unwrap();
        assert_eq!(s.text, " Graham is a US senator. ");
        assert_eq!(s.generator_id, "fn/m");
        assert_eq!(s.char_budget_used, "Senator.".len());
    }
}
