//! CLI error classification and exit codes.

use thiserror::Error;

/// Top-level CLI failure classes. Exit codes: 1 usage/config, 2 data,
/// 3 solver.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<identkit_core::Error> for CliError {
    fn from(err: identkit_core::Error) -> Self {
        use identkit_core::Error as E;
        match &err {
            E::InvalidSpace(_)
            | E::InvalidConfig(_)
            | E::UnknownModel(_)
            | E::UnknownSensor { .. }
            | E::NonPositiveParameter { .. } => CliError::Config(err.to_string()),
            E::DimensionMismatch { .. }
            | E::MissingSeries { .. }
            | E::DegenerateWeight { .. }
            | E::NonMonotoneTimes { .. } => CliError::Data(err.to_string()),
            E::InvalidFitness(_)
            | E::OutOfBounds(_)
            | E::Solver(_)
            | E::InsufficientData { .. } => CliError::Solver(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
