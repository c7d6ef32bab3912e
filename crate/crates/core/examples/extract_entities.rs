//! Rule-based NER plus the disease lexicon over the offline claims.
//!
//! cargo run --example extract_entities

use std::path::PathBuf;

use contextclaim::dataset::read_corpus;
use contextclaim::entity::{extract_entities, DiseaseLexicon, RuleNer};

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/offline");
    let ner = RuleNer::from_file(&root.join("ner_rules.json"))?;
    let lexicon = DiseaseLexicon::default();
    for claim in read_corpus(&root.join("claims.jsonl"))?.iter().take(8) {
        let lex = claim.dataset.uses_disease_lexicon().then_some(&lexicon);
        let entities = extract_entities(claim, &ner, lex)?;
        let shown: Vec<String> = entities.iter().map(|e| format!("{} [{}]", e.surface, e.etype)).collect();
        println!("{}: {}\n    {}", claim.id, claim.text, shown.join(", "));
    }
    Ok(())
}
