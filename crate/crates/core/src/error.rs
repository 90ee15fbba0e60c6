use std::path::PathBuf;

use thiserror::Error;

/// One broken invariant found while validating a curve matrix.
///
/// Row and column indices are zero-based matrix positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SeriesTooShort { len: usize },
    GridTooSmall { points: usize },
    NonFinite { row: usize, column: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::SeriesTooShort { len } => {
                write!(f, "series too short: T={len}, need at least 2 curves")
            }
            Violation::GridTooSmall { points } => {
                write!(f, "grid too small: p={points}, need at least 2 points")
            }
            Violation::NonFinite { row, column } => {
                write!(f, "non-finite value at ({row},{column})")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum FqaError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}, column {column}: cannot parse {text:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        text: String,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid curve matrix: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("non-positive price {value} at ({row},{column})")]
    NonPositivePrice { row: usize, column: usize, value: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("probability level {0} outside (0,1)")]
    LevelOutOfRange(f64),

    #[error("probability levels must be strictly ascending")]
    UnsortedLevels,

    #[error("level {0} is not part of the excursion table")]
    UnknownLevel(f64),

    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },

    #[error("degenerate cell: marginal probabilities ({p_hat}, {q_hat}) hit 0 or 1")]
    DegenerateCell { p_hat: f64, q_hat: f64 },

    #[error("all {0} cells of the FQA grid are degenerate (masked); nothing to test")]
    AllCellsMasked(usize),

    #[error("too few summand rows ({rows}) to estimate the covariance, need at least {min}")]
    TooFewRows { rows: usize, min: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown {what} {value:?}")]
    UnknownKind { what: &'static str, value: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl FqaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FqaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        FqaError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FqaError>;
