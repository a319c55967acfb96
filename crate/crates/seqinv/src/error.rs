//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported operator kind: {0}")]
    UnsupportedKind(String),

    #[error("net cardinality {count} exceeds cap {cap}")]
    CapExceeded { count: f64, cap: u64 },

    #[error(
        "packing infeasible at delta = {delta}: membership requires 0 < delta <= {max_delta}"
    )]
    InfeasiblePacking { delta: f64, max_delta: f64 },

    #[error("nonpositive density value {value} on the quadrature grid at {at:?}")]
    NonpositiveDensity { value: f64, at: Vec<f64> },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("bisection failed to bracket: {0}")]
    BracketFailure(String),

    #[error("xi = {xi} outside the admissible range [{lo}, 0.5)")]
    XiRange { xi: f64, lo: f64 },

    #[error("entropy integral diverges: a + b/2 = {0} >= 1")]
    DivergentEntropy(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
