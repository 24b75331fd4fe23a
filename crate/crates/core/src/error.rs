use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{basis} basis is not supported in dimension {dim}")]
    UnsupportedDimension { basis: &'static str, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid basis index: {0}")]
    InvalidIndex(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("the constant coefficient is fixed at 1 and cannot be supplied")]
    ConstantCoefficient,

    #[error("weight undefined for index {0}")]
    WeightUndefined(String),

    #[error("weight must be positive and finite, got {value} at index {index}")]
    NonPositiveWeight { index: String, value: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("point {row} has coordinate {value} outside [0, 1]")]
    OutOfDomain { row: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("condition failed: {0}")]
    ConditionFailed(String),

    #[error("density is not certified non-negative; enable positive-part sampling to proceed")]
    NotCertified,

    #[error("density is non-positive ({value}) at quadrature node {node:?}")]
    NonPositiveDensity { node: Vec<f64>, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
