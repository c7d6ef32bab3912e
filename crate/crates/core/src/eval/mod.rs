//! Metrics, error transitions, ablation deltas, and annotator agreement.

pub mod agreement;
pub mod metrics;
pub mod stats;

pub use agreement::{
    compare_tables, fleiss_components, fleiss_kappa, paired_t_test, read_ratings_csv, FleissComponents, RatingsTable,
    TTest,
};
pub use metrics::{
    ablation_chain, confusion, constant_predictions, delta_table, metrics, metrics_with, render_delta_table,
    transitions, AblationStep, ConfusionMatrix, DeltaRow, ErrorDistribution, F1Mode, MetricReport,
    TransitionReport, DEFAULT_FLAG_THRESHOLD,
};
