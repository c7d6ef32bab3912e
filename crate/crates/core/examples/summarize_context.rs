//! Render the summarization prompt for a hand-built knowledge base and run
//! it through the offline heuristic LLM, then compare with raw mode.
//!
//! cargo run --example summarize_context

use contextclaim::dataset::{Claim, Dataset, Split};
use contextclaim::embedding::RetrievalWeights;
use contextclaim::entity::{Entity, EntityType};
use contextclaim::offline::heuristic_llm;
use contextclaim::summarize::{materialize_context, render_summary_prompt, ContextMode};
use contextclaim::wiki::{CandidateExtract, KnowledgeBase, ScoredExtract};

fn main() -> contextclaim::Result<()> {
    let claim = Claim::new(
        "demo",
        "Ontario reported 1,200 new measles cases last week.",
        Dataset::CT22,
        Split::Test,
        None,
    )?;
    let weights = RetrievalWeights::default();
    let extract = |surface: &str, etype, title: &str, text: &str, page_id| {
        let candidate = CandidateExtract {
            entity: Entity::ner(surface, etype),
            title: title.into(),
            extract_text: text.into(),
            page_id,
            rank: 0,
        };
        ScoredExtract::new(candidate, 0.8, 0.7, &weights)
    };
    let mut kb = KnowledgeBase::empty(&claim.id);
    kb.selected.push(extract(
        "Ontario",
        EntityType::Loc,
        "Ontario",
        "Ontario is a province of Canada. It is the most populous province and home to Toronto.",
        1,
    ));
    kb.selected.push(extract(
        "measles",
        EntityType::Disease,
        "Measles",
        "Measles is a highly contagious infectious disease caused by the measles virus.",
        2,
    ));

    println!("--- prompt ---\n{}\n", render_summary_prompt(&claim, &kb)?);
    let llm = heuristic_llm("heuristic");
    let summary = materialize_context(&claim, &kb, ContextMode::Summary, Some(&llm))?;
    println!("--- summary by {} ---\n{}\n", summary.generator_id, summary.text);
    let raw = materialize_context(&claim, &kb, ContextMode::Raw, None)?;
    println!("--- raw ---\n{}", raw.text);
    Ok(())
}
