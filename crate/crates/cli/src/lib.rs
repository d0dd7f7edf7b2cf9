//! Library side of the `rdpersuasion` command-line tool: data ingestion,
//! configuration, the estimate/oracle/simulate commands and their reports.

pub mod config;
pub mod data;
pub mod estimate;
pub mod json;
pub mod oracle;
pub mod simulate;

use thiserror::Error;

pub use config::RunConfig;
pub use data::{read_csv, ColumnMap};
pub use estimate::{run_estimate, Report};
pub use oracle::{run_oracle, OracleReport};
pub use simulate::{run_simulate, SimulationSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}, column `{column}`: value {value} is not 0 or 1")]
    NonBinaryValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] rdpersuasion::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IO",
            CliError::MissingColumn(_) => "MISSING_COLUMN",
            CliError::ParseError { .. } => "PARSE_ERROR",
            CliError::NonBinaryValue { .. } => "NON_BINARY_VALUE",
            CliError::Config { .. } => "CONFIG",
            CliError::Usage(_) => "USAGE",
            CliError::Core(e) => e.code(),
            CliError::Json(_) => "JSON",
            CliError::Csv(_) => "CSV",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
