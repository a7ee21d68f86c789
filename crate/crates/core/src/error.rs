use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fractional order s = {0} must lie strictly inside (0, 1)")]
    InvalidOrder(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid coefficient field: {0}")]
    InvalidCoefficient(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-posed discretization: interior block is singular")]
    IllPosedDiscretization,

    #[error("no contraction: exterior data too large ({0})")]
    NoContraction(String),

    #[error("inversion is rank deficient (condition estimate {condition:e}); supply a positive regularization weight")]
    RankDeficient { condition: f64 },

    #[error("finite-difference stencil underdetermined: {points} amplitudes cannot resolve derivative order {order}")]
    StencilUnderdetermined { points: usize, order: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
