use thiserror::Error;

/// Failures mapped onto the process exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments: exit 2.
    #[error("{0}")]
    Config(String),
    /// Anything that went wrong while doing the work: exit 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub(crate) fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Simulation errors split by cause: bad settings are config errors,
/// everything else happened at run time.
pub(crate) fn from_sim(e: ema_sim::SimError) -> CliError {
    match e {
        ema_sim::SimError::Config(_) | ema_sim::SimError::TooFewSamples { .. } => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}
