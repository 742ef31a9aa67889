use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nhaqo::{run_to_file, ConfigError, Experiment, ExperimentConfig, RunError};

/// Run a named experiment and write its CSV output.
#[derive(Debug, Parser)]
#[command(name = "nhaqo", version)]
struct Cli {
    /// One of fig1, gap-trace, evolve, tau-sweep, ep-scan.
    experiment: Experiment,
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set delta0=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output CSV path; falls back to `output_path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(path) => {
            eprintln!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<PathBuf, RunError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    // the subcommand is authoritative; record it so the header hash covers it
    cfg.experiment = Some(cli.experiment);
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.clone());
    }
    let out = cfg.output_path.clone().ok_or(ConfigError::Missing("output_path"))?;
    run_to_file(cli.experiment, &cfg, &out)?;
    Ok(out)
}
