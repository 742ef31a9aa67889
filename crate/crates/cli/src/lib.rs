//! Experiment runner for non-Hermitian adiabatic quantum optimization.
//!
//! Experiments read a flat TOML config, run on `nhaqo-core` and emit CSV.

pub mod config;
pub mod csv;
pub mod experiments;

use std::path::Path;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run, RunError};

/// Runs `experiment` and returns the full CSV document.
pub fn render(experiment: Experiment, cfg: &ExperimentConfig) -> Result<String, RunError> {
    let table = run(experiment, cfg)?;
    Ok(table.render(experiment, cfg))
}

/// Runs `experiment` and writes the CSV to `out`.
pub fn run_to_file(experiment: Experiment, cfg: &ExperimentConfig, out: &Path) -> Result<(), RunError> {
    let text = render(experiment, cfg)?;
    std::fs::write(out, text).map_err(|source| RunError::Io {
        path: out.to_path_buf(),
        source,
    })
}
