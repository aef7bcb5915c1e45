//! Front end for `sldsl`: run configuration, commands and result files.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("solver: {0}")]
    Solver(#[from] sldsl_core::SolverError),
}

impl CliError {
    pub fn config(line: usize, key: &str, msg: &str) -> Self {
        CliError::Config {
            line,
            key: key.to_string(),
            msg: msg.to_string(),
        }
    }

    /// Everything here is reported as exit code 1 except solver failures
    /// mid-run, which count as non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// `{:?}` formatting with negative zero folded to zero, so `0.0` prints
/// the same whichever side it was approached from.
pub fn fmt_f64(v: f64) -> String {
    format!("{:?}", v + 0.0)
}
