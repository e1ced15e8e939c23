//! Command-line front end for training and evaluating fuzzy-tree LQR
//! controllers on the two-link arm.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use commands::Context;
pub use config::{RunConfig, ScenarioSelection};
pub use error::CliError;

/// Sizes the global rayon pool from `GFTLQR_THREADS`, if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GFTLQR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("GFTLQR_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("cannot size thread pool: {e}")))
}
