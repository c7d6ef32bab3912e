//! Context-augmented detection of verifiable claims.
//!
//! Claims are enriched with entity-linked Wikipedia extracts, optionally
//! condensed by an LLM, and classified with a few-shot prompt. The
//! [`pipeline`] module wires the stages together; [`eval`] scores the output.

pub mod cli;
pub mod dataset;
pub mod detect;
pub mod embedding;
pub mod entity;
pub mod error;
pub mod eval;
pub mod http;
pub mod io;
pub mod llm;
pub mod offline;
pub mod pipeline;
pub mod summarize;
pub mod wiki;

pub use error::{Error, Result};
