//! Fleiss' kappa per quality dimension for two summarizers' ratings, and a
//! paired t-test on per-item mean ratings.
//!
//! cargo run --example annotator_agreement

use std::path::PathBuf;

use contextclaim::eval::{compare_tables, fleiss_components, read_ratings_csv};

fn main() -> contextclaim::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ratings");
    let a = read_ratings_csv(&root.join("summarizer_a.csv"))?;
    let b = read_ratings_csv(&root.join("summarizer_b.csv"))?;
    for (dimension, table) in &a {
        let ka = fleiss_components(table)?;
        let kb = fleiss_components(&b[dimension])?;
        let t = compare_tables(table, &b[dimension])?;
        println!(
            "{dimension:<12} kappa A {:.3} (P {:.3}, Pe {:.3})  kappa B {:.3}  t {:+.3} df {} p {:.4}",
            ka.kappa, ka.p_bar, ka.p_e, kb.kappa, t.t, t.df, t.p_value
        );
    }
    Ok(())
}
