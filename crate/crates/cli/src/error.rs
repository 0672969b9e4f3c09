use std::path::PathBuf;

use fastsim_core::report::ReportError;
use fastsim_core::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The scenario file is missing, unparsable or fails validation.
    #[error("invalid configuration {path}:\n{message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot read results {path}: {source}")]
    Results { path: PathBuf, source: ReportError },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: ReportError },
    #[error("{action} {path}: {source}")]
    Io { action: &'static str, path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn io(action: &'static str, path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { action, path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Results { .. } => 2,
            CliError::Io { .. } | CliError::Output { .. } => 3,
            CliError::Sim(SimError::Config(_)) => 2,
            CliError::Sim(_) => 1,
        }
    }
}
