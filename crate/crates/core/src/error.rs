use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single malformed cell found while reading a listings CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: usize,
    pub column: String,
    pub reason: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column `{}`: {}", self.line, self.column, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{} malformed row(s); first: {}", .0.len(), .0[0])]
    RowParse(Vec<RowError>),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("need at least {needed} rows with working hours present, found {found}")]
    InsufficientCompleteRows { needed: usize, found: usize },
    #[error("too few rows: need {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),

    #[error("empty table")]
    EmptyTable,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training data: {0}")]
    InvalidData(String),

    #[error("fold too small: {n} rows cannot form {k} folds")]
    FoldTooSmall { n: usize, k: usize },
    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("mape undefined: true value at index {0} is zero")]
    ZeroTrueValue(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("sum of weights must be positive")]
    ZeroWeightSum,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("adapter handshake mismatch: {0}")]
    HandshakeMismatch(String),
    #[error("adapter timed out after {0:.1} s")]
    AdapterTimeout(f64),
    #[error("adapter protocol violation: {reason} (line: {line:?})")]
    ProtocolViolation { line: String, reason: String },
    #[error("adapter error {code}: {message}")]
    AdapterError { code: String, message: String },
    #[error("failed to spawn adapter `{command}`: {source}")]
    AdapterSpawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("every method failed on every subset")]
    AllMethodsFailed,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
