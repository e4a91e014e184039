//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("sector dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time t={t} outside the protocol interval [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("eigensolver failed to converge (LAPACK info = {0})")]
    Eigensolver(i32),

    #[error("propagation did not converge: {0}")]
    NonConvergence(String),

    #[error("propagated state norm drifted by {drift:.3e} (tolerance {tol:.3e})")]
    NormDrift { drift: f64, tol: f64 },

    #[error("thermal weight cutoff too aggressive for state-level quantities: discarded {0:.3e}")]
    CutoffTooAggressive(f64),

    #[error("incomplete sweep: {0}")]
    IncompleteSweep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
