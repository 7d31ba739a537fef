use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("generator index {index} out of range 1..={k}")]
    InvalidIndex { index: i32, k: usize },

    #[error("incompatible group algebras: F_{left} vs F_{right}")]
    IncompatibleAlgebra { left: usize, right: usize },

    #[error("unsupported exponent q = {0}: only even q >= 2 is computed exactly")]
    UnsupportedExponent(u32),

    #[error("support of {support} words exceeds the cap of {cap}")]
    ResourceLimit { support: usize, cap: usize },

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid pure state: {0}")]
    InvalidState(String),

    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },

    #[error("line {line}: schema version {found} is not supported (expected {expected})")]
    SchemaVersion {
        line: usize,
        found: u64,
        expected: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
