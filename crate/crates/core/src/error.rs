//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by solvers, generators and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The prox problem has no minimizer because an epigraph scalar has a
    /// nonpositive cost and no cap.
    #[error("unbounded prox: epigraph scalar {index} has cost {zeta}")]
    UnboundedProx { index: usize, zeta: f64 },

    #[error("unsupported operation: {0}")]
    Capability(String),

    #[error("stepsize collapse after {retries} retries (gamma = {gamma:e}, delta = {delta:e})")]
    StepsizeCollapse { retries: usize, gamma: f64, delta: f64 },

    #[error("schedule rejected: {0}")]
    Schedule(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("inconsistent bound inputs: {0}")]
    Bound(String),

    #[error("filter is empty")]
    EmptyFilter,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
