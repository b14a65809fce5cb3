//! Batch front-end: scenario files in, CSV/JSON artifacts out.

pub mod commands;
pub mod config;
pub mod validate;

use std::fmt;
use std::path::PathBuf;

pub use config::{SchemeChoice, ScenarioFile};
pub use validate::{validate_scenario, Violation};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    /// The scenario file is not valid TOML or does not match the schema.
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    Invalid(Vec<Violation>),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) => exit::CONFIG,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Io(_) => exit::IO,
        }
    }

    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        CliError::Invalid(vec![Violation::new(path, message)])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { path, line, column, message } => {
                write!(f, "{}:{line}:{column}: {}", path.display(), message.trim_end())
            }
            CliError::Invalid(vs) => {
                write!(f, "{} violation(s)", vs.len())?;
                for v in vs {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qpwms::Error> for CliError {
    fn from(e: qpwms::Error) -> Self {
        use qpwms::Error as E;
        match e {
            E::Config(_) | E::Timing { .. } => CliError::invalid("scenario", e.to_string()),
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            E::Shape(_) | E::Numeric(_) | E::Overflow { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
