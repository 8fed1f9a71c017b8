use thiserror::Error;

/// Unified error type for the engine.
///
/// `InvalidGraph` and `InvalidInput` indicate caller mistakes (bad geometry,
/// out-of-range parameters); the remaining variants are runtime failures of
/// the numerics themselves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested momentum is too close to a Dirichlet eigenvalue of some
    /// edge, where the elementary-solution Wronskian degenerates and the
    /// vertex reduction is ill-posed.
    #[error("momentum {k} is within {distance:.3e} of the singular set (guard {guard:.3e})")]
    SingularMomentum { k: f64, distance: f64, guard: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
