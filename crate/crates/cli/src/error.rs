use std::fmt;

use pspin_core::Error;

/// Failures surfaced to the shell, each with a fixed exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Output(String),
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::VerifyFailed(_) => 1,
            CliError::Core(e) => match e {
                Error::InfeasibleModel(_) => 3,
                Error::Instability(_) | Error::NonConvergence { .. } => 4,
                Error::ResourceLimit(_) => 5,
                Error::InvalidArgument(_)
                | Error::HorizonTooShort(_)
                | Error::InvalidWindow(_)
                | Error::Format(_)
                | Error::Io(_) => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::VerifyFailed(ids) => write!(f, "failing criteria: {}", ids.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
