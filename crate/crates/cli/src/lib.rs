//! Command-line front end: reads a run configuration, executes one
//! experiment and writes `report.json` plus CSV artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{Command, Overrides, RunConfig};
pub use error::CliError;
pub use input::parse_csv_dataset;

#[derive(Debug, Parser)]
#[command(name = "eos", version, about = "Entropic outlier sparsification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw; replaces all seeds in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for report.json and CSV outputs.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Regularization strength override; its meaning depends on the command.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// CSV dataset for detect, affinity, robust-train and mislabel-bench.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Suppress the summary line on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

/// Files written by a successful run.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    base.resolve(Overrides {
        command: cli.command,
        input_path: cli.input.clone(),
        output_dir: cli.output.clone(),
        seed: cli.seed,
        alpha: cli.alpha,
    })
}

/// Executes `config` and writes its outputs; the report goes last.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let outcome = commands::execute(config)?;
    let dir: &Path = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for (name, bytes) in &outcome.files {
        files.push(output::write_atomic(dir, name, bytes)?);
    }
    let report = output::report_json(config, &outcome.results)?;
    files.push(output::write_atomic(dir, "report.json", &report)?);
    Ok(RunOutput {
        summary: outcome.summary,
        files,
    })
}

/// Sizes the global worker pool from `EOS_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("EOS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::config(format!("EOS_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size the worker pool: {e}")))
}
