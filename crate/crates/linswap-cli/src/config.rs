//! Experiment configuration files and the errors that map to exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use linswap::equilibrium::{ConvexGame, GameSpec, SolutionSpec};
use linswap::geometry::{BodySpec, BoundedBody};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration (exit 2).
    Config(String),
    /// The solver failed on a valid configuration (exit 3).
    Solver(linswap::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
        }
    }
}

impl From<linswap::Error> for CliError {
    fn from(e: linswap::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Either an inline object or the path of a JSON file holding it, relative
/// to the configuration file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    File(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn load(&self, base: &Path) -> CliResult<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::File(p) => read_json(&base.join(p)),
        }
    }
}

/// Reads and parses a JSON file; every failure is a configuration error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Directory against which relative paths in a config are resolved.
pub fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn build_body(source: &Source<BodySpec>, base: &Path) -> CliResult<BoundedBody> {
    source
        .load(base)?
        .build()
        .map_err(|e| CliError::Config(format!("body: {e}")))
}

pub fn build_game(source: &Source<GameSpec>, base: &Path) -> CliResult<ConvexGame> {
    source
        .load(base)?
        .build()
        .map_err(|e| CliError::Config(format!("game: {e}")))
}

pub fn load_solution(source: &Source<SolutionSpec>, base: &Path) -> CliResult<SolutionSpec> {
    source.load(base)
}

pub fn require(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}
