use thiserror::Error;

use crate::reflections::ReflectionState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("particles {i} and {j} overlap: distance {distance:.6e} <= 2R = {contact:.6e}")]
    Overlap {
        i: usize,
        j: usize,
        distance: f64,
        contact: f64,
    },

    #[error("reflection series diverged at stage {}: contraction {:.4}", .0.stage, .0.contraction)]
    IterationDivergence(Box<ReflectionState>),

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("resolution too coarse: mass defect {defect:.3e}")]
    Resolution { defect: f64 },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
