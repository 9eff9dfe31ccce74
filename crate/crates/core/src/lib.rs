//! Synthetic biography benchmarks for long-context language models.
//!
//! The crate fabricates biography corpora from static attribute pools,
//! packs them into token-budgeted contexts with controllable needles and
//! distractors, instantiates retrieval, reasoning and trustworthiness tasks,
//! renders the prompts, drives OpenAI-compatible endpoints and scores the
//! answers with deterministic exact-match rules.
//!
//! Pipeline stages map onto modules:
//!
//! - [`corpus`]: attribute pools and person sampling
//! - [`biotext`]: biography rendering and surgical edits
//! - [`contextforge`]: token counting, haystack packing, needle insertion
//! - [`taskgen`]: benchmark instances and the JSONL dataset format
//! - [`promptkit`]: chat prompts and few-shot exemplars
//! - `evalrun`: batch runner (feature `runner`)
//! - [`scorekit`]: verdicts, hallucination rate, aggregation, Spearman
//! - [`oracle`]: a programmatic reader that answers from the context text

pub mod biotext;
pub mod contextforge;
pub mod corpus;
pub mod error;
#[cfg(feature = "runner")]
pub mod evalrun;
pub mod oracle;
pub mod promptkit;
pub mod rng;
pub mod scorekit;
pub mod taskgen;

pub use error::{Error, Result};

/// Schema tag carried by every dataset line and artifact.
pub const SCHEMA_VERSION: &str = "longbio/1";
