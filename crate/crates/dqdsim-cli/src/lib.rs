//! Command-line front end: device configs and schedules in, CSV tables and run
//! manifests out.

pub mod config;
mod manifest;
pub mod quantity;
pub mod range;
pub mod schedule;

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

pub use commands::Cli;
pub use config::{parse_device_config, to_config_string, ConfigError};
pub use schedule::{parse_schedule, to_schedule_string, ScheduleError};

/// Failure of one invocation, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read `{}`: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: ConfigError },
    #[error("{}: {source}", path.display())]
    Schedule { path: PathBuf, source: ScheduleError },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] dqdsim::Error),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// 1 usage, 2 input or model error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Model(e) if e.is_numeric() => 3,
            CliError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

/// Runs one command line and returns the process exit code. Diagnostics go to
/// standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
