use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density specification: {0}")]
    InvalidDensity(String),

    #[error("rejection sampler acceptance rate {rate:.3e} is below 1e-4 (envelope {envelope:.3e} too loose)")]
    EnvelopeTooLoose { rate: f64, envelope: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("Remez exchange failed: {0}")]
    Remez(String),

    #[error("linear program {0}")]
    LinearProgram(String),

    #[error("invalid estimator configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown estimator id `{0}`")]
    UnknownEstimator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
