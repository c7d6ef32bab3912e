//! Build a knowledge base for one claim against the fixture wiki, showing
//! every scored candidate before selection and the type filter.
//!
//! cargo run --example retrieve_knowledge

use std::path::PathBuf;
use std::sync::Arc;

use contextclaim::dataset::read_corpus;
use contextclaim::embedding::{Embedder, HashEmbedder, RetrievalWeights};
use contextclaim::entity::{extract_entities, RuleNer};
use contextclaim::http::{CachingTransport, RunMode};
use contextclaim::offline::FixtureWiki;
use contextclaim::wiki::{build_knowledge_base, fetch_candidates, KbOptions, WikiClient};

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/offline");
    let wiki = Arc::new(FixtureWiki::from_file(&root.join("wiki_pages.json"))?);
    let transport = Arc::new(CachingTransport::new("wiki", RunMode::Live, Some(wiki), None));
    let client = WikiClient::new("https://fixture.invalid/w/api.php", transport);
    let embedder = Embedder::new(Arc::new(HashEmbedder::default()));
    let weights = RetrievalWeights::default();

    let claims = read_corpus(&root.join("claims.jsonl"))?;
    let claim = &claims[0];
    let entities = extract_entities(claim, &RuleNer::from_file(&root.join("ner_rules.json"))?, None)?;
    println!("{}: {}", claim.id, claim.text);
    for entity in &entities {
        println!("  entity `{}` [{}]", entity.surface, entity.etype);
        for c in fetch_candidates(entity, &client, weights.p)? {
            let s = embedder.similarity(&claim.text, &c.extract_text)?;
            let t = embedder.similarity(&claim.text, &c.title)?;
            println!("    #{} {:<32} extract {:.3}  title {:.3}", c.rank, c.title, s, t);
        }
    }
    let kb = build_knowledge_base(claim, &entities, &client, &embedder, &weights, KbOptions::default())?;
    for s in &kb.selected {
        println!("selected: {} (score {:.3})", s.candidate.title, s.score);
    }
    for d in &kb.dropped {
        println!("dropped: {} ({:?})", d.entity.surface, d.reason);
    }
    Ok(())
}
