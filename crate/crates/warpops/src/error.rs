use thiserror::Error;

use crate::domain::FeasibilityReport;

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("derivative of order {order} is discontinuous at singularity x = {at}")]
    JetMismatch { at: f64, order: usize },

    #[error("inverse map did not converge for y = {0}")]
    InverseDiverged(f64),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("infeasible specification: {}", .0.summary())]
    Infeasible(Box<FeasibilityReport>),

    #[error("compressed dual iteration diverges: spectral radius {0:.6} >= 1 (increase M so that J > 1 at every singularity)")]
    DualDiverges(f64),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WarpError>;
