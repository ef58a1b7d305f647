use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("budget {budget} must satisfy 1 <= budget <= {n_arms}")]
    BudgetOutOfRange { budget: usize, n_arms: usize },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("arm index {index} is invalid for {n_arms} arms")]
    InvalidArm { index: usize, n_arms: usize },

    #[error("selection is empty")]
    EmptySelection,

    #[error("selection contains arm {0} more than once")]
    DuplicateArm(usize),

    #[error(
        "no Beta distribution has mean {mean} and variance {variance}: \
         the variance must be below mean(1-mean) = {bound}"
    )]
    InfeasibleMoments { mean: f64, variance: f64, bound: f64 },

    #[error(
        "exhaustive search over {candidates} candidates exceeds the cap of {cap}; \
         use the greedy benchmark instead"
    )]
    EnumerationCap { candidates: f64, cap: f64 },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("box budget {box_budget} does not divide total budget {budget}")]
    IndivisibleBudget { budget: usize, box_budget: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("row {row}: expected {expected} values, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: value {value} is outside [0, 1]")]
    CellOutOfRange { row: usize, column: usize, value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("trial {index} failed: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
