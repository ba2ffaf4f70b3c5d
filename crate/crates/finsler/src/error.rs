//! Shared error type for the engine.

use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::jet::JetError;

#[derive(Debug, Error)]
pub enum FinslerError {
    #[error("jet error: {0}")]
    Jet(#[from] JetError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("domain error: {guard}")]
    Domain { guard: String },
    #[error("matrix a_ij is not positive definite at the evaluation point")]
    NotPositiveDefinite,
    #[error("fundamental tensor g_ij is singular at the evaluation point")]
    SingularFundamental,
    #[error("quadrature did not converge: two-resolution relative discrepancy {0:.3e}")]
    QuadratureDiverged(f64),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("unknown zoo entry `{0}`")]
    UnknownZooEntry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zoo entry `{id}` failed validation:\n{report}")]
    ZooValidation { id: String, report: String },
    #[error("{0}")]
    Report(String),
}

impl FinslerError {
    /// Exit-code class: 2 input error, 3 domain error.
    pub fn exit_code(&self) -> i32 {
        match self {
            FinslerError::Parse(_)
            | FinslerError::InvalidMetric(_)
            | FinslerError::UnknownZooEntry(_)
            | FinslerError::InvalidParameter(_) => 2,
            _ => 3,
        }
    }
}
