//! Library error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no token reached min_count={min_count}; vocabulary is empty")]
    EmptyVocabulary { min_count: usize },

    #[error("token '{token}' never appears in the corpus: positive example pool is empty")]
    PositivePoolEmpty { token: String },

    #[error("token '{token}' appears in every document: negative example pool is empty")]
    NegativePoolEmpty { token: String },

    #[error("invalid bank config: {0}")]
    InvalidConfig(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: String, expected: [u8; 4] },

    #[error("unsupported version {found} in {path} (expected {expected})")]
    BadVersion {
        path: String,
        found: u16,
        expected: u16,
    },

    #[error("truncated or malformed file {path}: {detail}")]
    MalformedFile { path: String, detail: String },

    #[error("feature count mismatch in {path}: file has V={found}, expected V={expected}")]
    FeatureCountMismatch {
        path: String,
        found: u32,
        expected: u32,
    },

    #[error("missing example file for token '{token}': {path}")]
    MissingExampleFile { token: String, path: String },

    #[error("embedding for '{token}' is the zero vector; cosine undefined")]
    ZeroVector { token: String },

    #[error("degenerate input for {what}: {detail}")]
    DegenerateInput { what: &'static str, detail: String },

    #[error("{path}:{line}: malformed line: {detail}")]
    MalformedLine {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("dataset {path} contains no pairs")]
    EmptyDataset { path: String },

    #[error("fewer than 2 covered pairs ({covered} covered, {skipped} skipped)")]
    InsufficientCoverage { covered: usize, skipped: usize },

    #[error("empty embedding matrix; nothing to export")]
    EmptyMatrix,

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
