use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the screening pipeline.
///
/// Variable, row and column numbers carried in messages are 1-based so they
/// line up with what a user sees in their CSV files.
#[derive(Debug, Error)]
pub enum MugError {
    #[error("column {column} of the design matrix is all zeros")]
    ZeroColumn { column: usize },

    #[error("cannot intersect an empty list of supports")]
    EmptyList,

    #[error("group index {index} is out of range for a grouping with {groups} groups")]
    BadGroupIndex { index: usize, groups: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("variable index {index} is out of range 1..={p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("invalid configuration for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("design matrix columns are not normalized (||X_j||^2/n = 1 required)")]
    NotNormalized,

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("train/test split leaves too few rows (train {train}, test {test}; need at least 2 each)")]
    DegenerateSplit { train: usize, test: usize },

    #[error("{}: line {line} has {found} fields, expected {expected}", path.display())]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{}: non-numeric cell {value:?} at row {row}, column {column}", path.display())]
    NonNumericCell {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{}: {reason}", path.display())]
    BadFile { path: PathBuf, reason: String },

    #[error("row count mismatch: {x_path} has {x_rows} rows but {y_path} has {y_rows}")]
    RowMismatch {
        x_path: String,
        x_rows: usize,
        y_path: String,
        y_rows: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MugError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        MugError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = MugError> = std::result::Result<T, E>;
