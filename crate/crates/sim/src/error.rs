use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] ema_core::Error),

    #[error("{samples} samples cannot give each of {clients} clients at least one")]
    TooFewSamples { samples: usize, clients: usize },

    #[error("idx: {0}")]
    Idx(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
