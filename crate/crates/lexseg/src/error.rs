use std::path::PathBuf;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("document {doc}: span [{start}, {end}) out of range for text of length {len}")]
    SpanOutOfRange {
        doc: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error(
        "document {doc}: annotator {annotator} has overlapping spans [{first_start}, {first_end}) and [{second_start}, {second_end})"
    )]
    SpanOverlap {
        doc: String,
        annotator: String,
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },

    #[error("duplicate document id {0}")]
    DuplicateDocument(String),

    #[error("document {doc}: annotator {annotator} not present")]
    MissingAnnotator { doc: String, annotator: String },

    #[error("document {doc} has {len} sentences, above the maximum of {max}")]
    DocumentTooLong { doc: String, len: usize, max: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("embedding store format error: {0}")]
    Format(String),

    #[error("no embedding for sentence {0}")]
    MissingEmbedding(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("every position in the batch is masked")]
    AllMasked,

    #[error("context {context} has {count} documents, at least {needed} are required")]
    TooFewDocuments {
        context: String,
        count: usize,
        needed: usize,
    },

    #[error("unknown context {0}")]
    UnknownContext(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
