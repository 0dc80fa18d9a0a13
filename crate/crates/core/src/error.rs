use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown attribute: {0}")]
    UnknownAttribute(String),

    #[error("non-finite value produced in {context}")]
    NonFinite { context: String },

    #[error("non-finite gradient, step skipped")]
    NonFiniteGradient,

    #[error("interpolation weights must sum to 1 (got {sum})")]
    WeightSum { sum: f64 },

    #[error("control spec has no terms")]
    EmptyControlSpec,

    #[error("standard deviation must be positive (got {0})")]
    NonPositiveSigma(f64),

    #[error("the two distributions are identical: they intersect everywhere")]
    IdenticalDistributions,

    #[error("intersection requires distinct means")]
    CoincidentMeans,

    #[error("dataset is empty: no records")]
    EmptyDataset,

    #[error("per-attribute counts are unbalanced: {min} vs {max} differ by more than 10%")]
    UnbalancedAttributes { min: usize, max: usize },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("quadrature needs an odd node count of at least 3 (got {0})")]
    QuadratureResolution(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
