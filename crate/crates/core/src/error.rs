use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("corpus is empty after filtering ({dropped} documents dropped)")]
    EmptyCorpus { dropped: usize },

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("time slice {slice} is empty; try fewer slices (requested {num_slices})")]
    EmptySlice { slice: usize, num_slices: usize },

    #[error("corpus spans a single timestamp ({timestamp}); time slicing needs at least two")]
    SingleTimestamp { timestamp: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("embedding provider `{provider}` failed for documents {first}..{last}: {message}")]
    Provider {
        provider: String,
        first: usize,
        last: usize,
        message: String,
    },

    #[error("remote embedding: {0}")]
    Remote(String),

    #[error("training diverged at epoch {epoch}: total loss is not finite")]
    Diverged { epoch: usize },

    #[error("supervised mode: {0}")]
    Labels(String),

    #[error("{path}: invalid checkpoint: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("{path}: invalid corpus file: {message}")]
    CorpusFile { path: PathBuf, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors the CLI reports as usage errors (exit code 1).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
