use alloc::string::String;

/// Errors raised by the core engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("aggregate {func} requires a numeric column, `{column}` is not numeric")]
    NonNumericAggregate { func: &'static str, column: String },
    #[error("malformed action: {0}")]
    MalformedAction(String),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
