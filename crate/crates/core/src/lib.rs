//! Temporal topic-evolution engine.
//!
//! A timestamped corpus is tokenized and sliced into equal-width time
//! intervals, embedded, pooled with time-decayed attention, and mapped to
//! per-document topic distributions. Slice-level topic states are tied
//! together by a learned transition matrix, and the result is scored with
//! perplexity, topic diversity, NPMI coherence and topic stability.

mod binfmt;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod temporal;

pub use config::Config;
pub use corpus::{Corpus, Document, TimeSliceIndex, Vocabulary};
pub use embed::{EmbeddingMatrix, EmbeddingProvider};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use model::{Checkpoint, ModelParams, TopicAssignments};
