//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("XML parse error at line {line}: {message}")]
    Xml { line: usize, message: String },

    #[error("trace {case_id:?}: event missing {what}")]
    EventAttribute { case_id: String, what: String },

    #[error("duplicate case id {0:?}")]
    DuplicateCase(String),

    #[error("CSV row {row}: {message}")]
    CsvRow { row: usize, message: String },

    #[error("missing column {0:?} in CSV header")]
    MissingColumn(String),

    #[error("CSV row {row}: cannot parse timestamp {value:?} with format {format:?}")]
    Timestamp {
        row: usize,
        value: String,
        format: String,
    },

    #[error("operation requires a nonempty log")]
    EmptyLog,

    #[error("unknown activity {0:?}")]
    UnknownActivity(String),

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("distribution distance requires nonempty multisets")]
    EmptyMultiset,

    #[error("no candidate traces to merge into")]
    NoCandidates,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("embedding model file is invalid: {0}")]
    ModelFormat(String),

    #[error("log has no directly-follows pairs")]
    NoDirectlyFollows,

    #[error("event distance statistics require at least two activities")]
    SingletonVocab,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
