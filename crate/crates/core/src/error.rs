use thiserror::Error;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The confinement/feasibility condition `sup φ(x)(1-x) >= b` fails.
    #[error("infeasible model: {0}")]
    InfeasibleModel(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("horizon too short: {0}")]
    HorizonTooShort(String),

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
