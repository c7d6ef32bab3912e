//! Load the synthetic CT22 corpus from its manifest, print split statistics
//! and carve a stratified dev set out of the training split.
//!
//! cargo run --example ingest_and_split

use std::path::PathBuf;

use contextclaim::dataset::{corpus_stats, load_manifest, stratified_split, Split};

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ct22");
    let loaded = load_manifest(&root.join("manifest.toml"))?;
    println!("{}", corpus_stats(&loaded.claims));
    println!("rejected rows: {}", loaded.rejected.len());

    let train: Vec<_> = loaded.claims.iter().filter(|c| c.split == Split::Train).cloned().collect();
    let (rest, dev) = stratified_split(&train, 0.1, 42)?;
    println!("\ntrain {} -> train {} + dev {}", train.len(), rest.len(), dev.len());
    println!("{}", corpus_stats(&dev));
    Ok(())
}
