//! The eight prompt variants for one claim: baseline or augmented, zero or
//! three shots, with or without the doubt directive. Also shows how raw
//! completions are parsed.
//!
//! cargo run --example detection_prompts

use std::path::PathBuf;

use contextclaim::dataset::{read_corpus, Label};
use contextclaim::detect::{parse_verdict, render_detection_prompt, sample_few_shot, PromptConfig};
use contextclaim::summarize::ContextSummary;

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/offline");
    let claims = read_corpus(&root.join("claims.jsonl"))?;
    let shots = sample_few_shot(&read_corpus(&root.join("train.jsonl"))?, 42)?;
    let claim = &claims[2];
    let mut context = ContextSummary::none(&claim.id);
    context.text = "Texas is a state in the South Central region of the United States.".into();

    for base in [PromptConfig::baseline(), PromptConfig::augmented()] {
        for k in [0, 3] {
            for doubt in [true, false] {
                let mut cfg = base.clone().with_shots(shots[..k].to_vec());
                if !doubt {
                    cfg = cfg.without_doubt_directive();
                }
                let name = format!(
                    "{} / {} / {}",
                    if cfg.augmented { "augmented" } else { "baseline" },
                    if k == 0 { "zero-shot" } else { "3-shot" },
                    if doubt { "doubt" } else { "no doubt" }
                );
                println!("===== {name} =====\n{}\n", render_detection_prompt(claim, &context, &cfg));
            }
        }
    }

    for raw in ["Yes", " no.", "YES, it is", "I cannot tell", ""] {
        println!("{raw:?} -> {:?}", parse_verdict(raw, Label::Verifiable));
    }
    Ok(())
}
