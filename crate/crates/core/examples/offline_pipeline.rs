//! End to end without network access: record a run into a fresh cache,
//! replay it, and confirm the predictions match byte for byte.
//!
//! cargo run --example offline_pipeline

use std::path::PathBuf;

use contextclaim::pipeline::{verify_manifest, Pipeline, PipelineConfig, PREDICTIONS_FILE};

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/offline");
    let work = std::env::temp_dir().join(format!("contextclaim-example-{}", std::process::id()));
    let cache = format!("cache_root={}", toml::Value::String(work.join("cache").display().to_string()));

    let mut outputs = Vec::new();
    for mode in ["record", "replay"] {
        let overrides = vec![cache.clone(), format!("run_mode=\"{mode}\"")];
        let cfg = PipelineConfig::load(Some(&root.join("pipeline.toml")), &overrides)?;
        let pipeline = Pipeline::from_config(cfg)?;
        let out = work.join(mode);
        let manifest = pipeline.run(&root.join("claims.jsonl"), &out)?;
        verify_manifest(&out)?;
        println!(
            "{mode:<6} {} claims, {} predictions, {} failures, {} provider calls",
            manifest.counts.claims,
            manifest.counts.predictions,
            manifest.counts.failures,
            pipeline.network_calls()
        );
        outputs.push(contextclaim::io::read_to_string(&out.join(PREDICTIONS_FILE))?);
    }
    println!("replay identical: {}", outputs[0] == outputs[1]);
    println!("artifacts under {}", work.display());
    Ok(())
}
