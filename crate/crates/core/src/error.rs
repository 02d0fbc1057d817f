use thiserror::Error;

use crate::emden::EmdenState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Parameters or inputs violate a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Emden right-hand side was evaluated at a = 0.
    #[error("singular evaluation: a = 0 (collapse reached)")]
    Singular,

    #[error("integration failed at s = {}: step size {step:e} fell below floor {floor:e}", last.s)]
    IntegrationFailure {
        last: EmdenState,
        step: f64,
        floor: f64,
    },

    #[error("time {requested} outside trajectory range [0, {max}]")]
    OutOfRange { requested: f64, max: f64 },

    #[error("orbit does not collapse: {0}")]
    NoCollapse(String),

    #[error("invalid energy: theta = {0} must be positive on a collapsing orbit")]
    InvalidEnergy(f64),

    #[error("profile slope is unbounded at support boundary eta = {0}")]
    BoundarySingularity(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A numerical check ran to completion but the expected trajectory
    /// event did not occur (e.g. collapse predicted but never detected).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::NoCollapse(_)
            | Error::OutOfRange { .. }
            | Error::BoundarySingularity(_) => 1,
            Error::Singular
            | Error::IntegrationFailure { .. }
            | Error::InvalidEnergy(_)
            | Error::Quadrature(_)
            | Error::Numerical(_) => 2,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
