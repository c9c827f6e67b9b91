//! Library half of the `evfuse` command-line tool: argument types, config
//! merging, the run manifest and the subcommand implementations. `main.rs`
//! only parses arguments and maps errors to exit codes.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

pub use args::{Cli, Command};
pub use manifest::RunManifest;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("bound violated: {0}")]
    Bound(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for bad or missing data, 4 when a
    /// `--fail-above` bound is exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Bound(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<evfuse::Error> for CliError {
    fn from(e: evfuse::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Represent(a) => commands::represent(&a),
        Command::Fuse(a) => commands::fuse(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Evaluate(a) => commands::evaluate(&a).map(|_| ()),
        Command::Pipeline(a) => commands::pipeline(&a).map(|_| ()),
    }
}
