//! Batch runner for emitter-centered mode simulations: reads a TOML run
//! configuration, executes one scenario and writes CSV outputs plus a JSON
//! run manifest.
//!
//! Exit codes: 0 success, 2 invalid configuration or input data, 3 runtime
//! failure, 4 I/O failure.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{parse_and_validate, RunConfig, Scenario};
pub use error::{CliError, Issue};
pub use run::{config_hash, run, RunManifest, RunOptions};

/// Writes `error.txt` into the run's output directory, creating it when
/// possible. Returns the path written.
pub fn write_diagnostic(options: &RunOptions, err: &CliError) -> Option<PathBuf> {
    let loaded = config::read(&options.config).ok();
    let dir = run::output_dir(options, loaded.as_ref());
    std::fs::create_dir_all(&dir).ok()?;
    let path = dir.join(run::ERROR_FILE);
    let text = format!("exit code {}\n{err}\n", err.exit_code());
    std::fs::write(&path, text).ok()?;
    Some(path)
}
