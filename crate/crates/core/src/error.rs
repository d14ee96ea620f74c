use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("number of spins must satisfy 1 <= n <= {max}, got {n}")]
    InvalidSpinCount { n: usize, max: usize },

    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter vector contains a non-finite entry at index {index}")]
    NonFiniteParameter { index: usize },

    #[error(
        "model probability underflows to zero on state {state} where the target has mass; \
         parameters are too extreme for n = {n}"
    )]
    ModelSupport { state: usize, n: usize },

    #[error(
        "curvature C + eps*I is not numerically positive definite (eps = {epsilon:e}); \
         increase eps"
    )]
    Factorization { epsilon: f64 },

    #[error("PCA needs at least two distinct points across the supplied paths; add runs or iterations")]
    RankDeficient,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
