//! Batch experiments over the supply chain finance game: parameter files,
//! loan-rate presets and CSV / JSON / SVG artifacts.

pub mod commands;
pub mod config;
pub mod rates;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{CliError, CommandOutput, Formats, Overrides};
pub use config::{load_config, ConfigError, ExperimentConfig};
pub use rates::{apply_rate_preset, LoanTerm, RatePreset};

#[derive(Debug, Parser)]
#[command(
    name = "scfgame",
    version,
    about = "Evolutionary game of blockchain-enabled supply chain finance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate trajectories from the configured initial states.
    Simulate(CommonArgs),
    /// List equilibria with eigenvalues and stability classes.
    Stability(CommonArgs),
    /// Estimate basins of attraction from seeded random initial states.
    Basins(CommonArgs),
    /// Compare E8 condition margins with and without cost reductions.
    Compare(CommonArgs),
    /// Evaluate E8 stability over a parameter grid.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named parameter preset, used when no config file is given.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Output directory (overrides `outputs.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for basin sampling and random initial states.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated output formats: csv,json,svg.
    #[arg(long)]
    pub format: Option<String>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let config = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => ExperimentConfig::from_preset(name)?,
            (None, None) => {
                return Err(CliError::Usage(
                    "either --config or --preset is required".into(),
                ))
            }
        };
        let formats = self.format.as_deref().map(Formats::parse).transpose()?;
        let overrides = Overrides {
            out: self.out.clone(),
            seed: self.seed,
            formats,
        };
        Ok(overrides.apply(config))
    }
}

/// Runs one parsed command.
pub fn run(command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Simulate(a) => commands::cmd_simulate(&a.load()?),
        Command::Stability(a) => commands::cmd_stability(&a.load()?),
        Command::Basins(a) => commands::cmd_basins(&a.load()?),
        Command::Compare(a) => commands::cmd_compare(&a.load()?),
        Command::Sweep(a) => commands::cmd_sweep(&a.load()?),
    }
}
