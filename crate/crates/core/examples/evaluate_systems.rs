//! Metrics, error distribution, transition analysis and an ablation delta
//! table over the small transitions fixture.
//!
//! cargo run --example evaluate_systems

use std::path::PathBuf;

use contextclaim::dataset::{read_corpus, Label};
use contextclaim::detect::Prediction;
use contextclaim::eval::{ablation_chain, confusion, constant_predictions, metrics, render_delta_table, transitions};
use contextclaim::io::read_jsonl;

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/transitions");
    let gold = read_corpus(&root.join("gold.jsonl"))?;
    let baseline: Vec<Prediction> = read_jsonl(&root.join("baseline.jsonl"))?;
    let system: Vec<Prediction> = read_jsonl(&root.join("system.jsonl"))?;
    let always_yes = constant_predictions(&gold, Label::Verifiable, "always-yes");

    let mut arms = Vec::new();
    for (name, preds) in [("always-yes", &always_yes), ("baseline", &baseline), ("system", &system)] {
        let cm = confusion(preds, &gold)?;
        let m = metrics(&cm)?;
        println!("{name:<11} {m}\n            {}", cm.error_distribution());
        arms.push((name.to_string(), m));
    }

    let t = transitions(&baseline, &system, &gold)?;
    println!(
        "\nbaseline -> system: fixed {} ({} FN, {} FP), regressed {} ({} new FP, {} new FN), net FP {:+}, net FN {:+}",
        t.fixed, t.fixed_fn, t.fixed_fp, t.regressed, t.new_fp, t.new_fn, t.net_fp_delta, t.net_fn_delta
    );

    for step in ablation_chain(&arms, 3.5) {
        println!("\n{} -> {}\n{}", step.from, step.to, render_delta_table(&step.deltas));
    }
    Ok(())
}
