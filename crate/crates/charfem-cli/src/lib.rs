//! Library half of the `charfem` command-line harness: config parsing and
//! merging, command implementations, and CSV/plot-data writers. The binary
//! in `main.rs` is a thin clap wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

/// Exit code 2: a run failed while solving.
pub const EXIT_SOLVER: u8 = 2;
/// Exit code 3: invalid configuration (flags, config file, or values).
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure{}: {message}", partition.map(|i| format!(" in partition {i}")).unwrap_or_default())]
    Solver {
        partition: Option<usize>,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver { .. } => EXIT_SOLVER,
            CliError::Io(_) => 1,
        }
    }

    pub(crate) fn from_run_error(e: charfem::Error) -> Self {
        CliError::Solver {
            partition: e.partition_index(),
            message: e.to_string(),
        }
    }
}
