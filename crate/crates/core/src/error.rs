use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series did not converge within {max_terms} terms (last term {last_term:e})")]
    NoConvergence { max_terms: usize, last_term: f64 },

    #[error("partition enumeration of k={k} refused: Bell({k}) = {bell} exceeds the cap k <= {cap}")]
    PartitionCap { k: usize, cap: usize, bell: u128 },

    #[error("weights did not reach {threshold} within {cap} sticks (residual stick {residual:e})")]
    TruncationCap { threshold: f64, cap: usize, residual: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
