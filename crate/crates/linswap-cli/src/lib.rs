//! Command-line harness around the `linswap` library: regret runs,
//! equilibrium solves, self-play, verification and the hardness example.
//!
//! Every command reads one JSON configuration file. Bodies, games and
//! solutions may be given inline or as paths relative to that file.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use config::{base_dir, read_json, CliError, CliResult};
use output::to_json;

#[derive(Debug, Parser)]
#[command(
    name = "linswap",
    version,
    about = "Linear-swap regret and linear correlated equilibria"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (CSV or JSON depending on the command); stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every randomized component; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Error)]
    pub log: LogLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Error,
    Info,
    Debug,
}

impl LogLevel {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the linear-swap learner against an adversary; per-round CSV.
    RegretRun,
    /// Compute an approximate linear correlated equilibrium; solution JSON.
    Lce,
    /// Self-play with linear-swap learners; per-round gap CSV.
    Selfplay,
    /// Gaps of a given solution.
    Verify,
    /// The ball versus capped-ball example.
    DemoHardness,
}

fn config_path(cli: &Cli) -> CliResult<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))
}

/// Path of the summary written next to a CSV output: `run.csv` gives
/// `run.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn emit_summary(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(summary_path(p), text)?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::RegretRun => {
            let path = config_path(cli)?;
            let cfg = read_json(path)?;
            let s = commands::regret::run(&cfg, &base_dir(path), cli.seed, out)?;
            emit_summary(out, &to_json(&s))
        }
        Command::Lce => {
            let path = config_path(cli)?;
            let cfg = read_json(path)?;
            let sol = commands::lce::run(&cfg, &base_dir(path))?;
            emit(out, &to_json(&sol))
        }
        Command::Selfplay => {
            let path = config_path(cli)?;
            let cfg = read_json(path)?;
            let s = commands::selfplay::run(&cfg, &base_dir(path), cli.seed, out)?;
            emit_summary(out, &to_json(&s))
        }
        Command::Verify => {
            let path = config_path(cli)?;
            let cfg = read_json(path)?;
            let r = commands::verify::run(&cfg, &base_dir(path))?;
            emit(out, &to_json(&r))
        }
        Command::DemoHardness => {
            let cfg = match cli.config.as_deref() {
                Some(p) => read_json(p)?,
                None => commands::hardness::HardnessConfig { dim: 2 },
            };
            let r = commands::hardness::run(&cfg)?;
            emit(out, &to_json(&r))
        }
    }
}
