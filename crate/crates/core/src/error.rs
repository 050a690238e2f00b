//! Crate-wide error type.
//!
//! Every fallible operation in the pipeline returns [`Error`]. Variants are
//! grouped by where they arise: file/data handling, dataset selection, and
//! numeric routines. [`Error::category`] classifies them for process exit
//! codes in the CLI.

use chrono::{DateTime, FixedOffset};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Caller misuse: bad flags, mismatched arities, malformed specs.
    Usage,
    /// Problems with the input data: parse failures, gaps, overlaps.
    Data,
    /// Numeric failures: degenerate matrices, constant series, bad domains.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    // --- file and data handling ---
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: String,
        reason: String,
    },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(DateTime<FixedOffset>),
    #[error("empty file: {0}")]
    EmptyFile(String),
    #[error("empty input")]
    EmptyInput,
    #[error("no overlapping records within tolerance")]
    NoOverlap,
    #[error("split requests {requested} rows but only {available} are available")]
    CountExceedsData { requested: usize, available: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("insufficient data: need {needed} usable rows, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("dataset is not on a uniform grid near {0}")]
    NotOnGrid(DateTime<FixedOffset>),
    #[error("insufficient history: need {needed} grid rows, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),

    // --- numeric routines ---
    #[error("column '{0}' is constant; min-max scaling is undefined")]
    ConstantColumn(String),
    #[error("series '{0}' is constant; correlation is undefined")]
    ConstantSeries(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty vector")]
    EmptyVector,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid degrees of freedom: {0}")]
    InvalidDf(String),
    #[error("feature matrix is rank deficient ({0})")]
    RankDeficient(String),
    #[error("underdetermined system: {rows} rows for {cols} coefficients")]
    Underdetermined { rows: usize, cols: usize },
    #[error("regression model has not been fitted")]
    NotFitted,
    #[error("network has not been trained")]
    NotTrained,
    #[error("non-finite value in column '{0}'")]
    NonFinite(String),

    // --- topology and training ---
    #[error("malformed topology '{0}': expected colon-separated positive integers")]
    MalformedTopology(String),
    #[error("topology expects {expected} inputs but {found} variables are selected")]
    TopologyInputMismatch { expected: usize, found: usize },
    #[error("input does not look normalized: |{0}| > 10")]
    UnnormalizedInput(f64),
    #[error("bad model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidSplit(_) | InvalidConfig(_) | MalformedTopology(_)
            | TopologyInputMismatch { .. } => ErrorCategory::Usage,
            Parse { .. } | DuplicateTimestamp(_) | EmptyFile(_) | EmptyInput | NoOverlap
            | CountExceedsData { .. } | InsufficientData { .. } | NotOnGrid(_)
            | InsufficientHistory { .. } | Io(_) | ModelFormat(_) => ErrorCategory::Data,
            ConstantColumn(_) | ConstantSeries(_) | LengthMismatch { .. } | EmptyVector
            | ShapeMismatch(_) | InvalidDf(_) | RankDeficient(_) | Underdetermined { .. }
            | NotFitted | NotTrained | NonFinite(_) | UnnormalizedInput(_) => {
                ErrorCategory::Numeric
            }
        }
    }
}
