//! Library side of the `ema` binary: config handling, manifests and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use error::{CliError, CliResult};

/// Caps the global rayon pool at `EMA_THREADS` when that is set.
pub fn init_thread_pool() -> CliResult<()> {
    let Ok(raw) = std::env::var("EMA_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("EMA_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}
