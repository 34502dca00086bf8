use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced to the command line, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<noisim::Error> for CliError {
    fn from(e: noisim::Error) -> Self {
        use noisim::Error as E;
        match e {
            E::Argument(_) => CliError::Config(e.to_string()),
            E::Numerical(_) | E::FitDivergence { .. } => CliError::Numerical(e.to_string()),
            E::Dimension { .. } | E::Data(_) | E::Io(_) | E::Json(_) | E::Csv(_) => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
