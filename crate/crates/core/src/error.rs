use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}, column {column}: non-finite value {value:?}")]
    NonFinite {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    Arity {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("label column {0} not found")]
    MissingLabelColumn(String),

    #[error("column {name} (index {index}) has zero variance")]
    ZeroVariance { index: usize, name: String },

    #[error("all columns have zero variance")]
    AllConstant,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} out of range [1, {n}]")]
    KOutOfRange { k: usize, n: usize },

    #[error("invalid boundary parameters: {0}")]
    InvalidBoundary(String),

    #[error("distance row too short: need {required} distances, have {available}")]
    RowTooShort { required: usize, available: usize },

    #[error("gamma undefined: prefix mean equals its last element")]
    GammaUndefined,

    #[error("no point has a good cardinality estimate; try adjusting the boundaries")]
    NoGoodEstimates,

    #[error("degenerate bandwidth (h = 0)")]
    DegenerateBandwidth,

    #[error("non-finite position for point {index} at iteration {iteration}")]
    Divergence { index: usize, iteration: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}
