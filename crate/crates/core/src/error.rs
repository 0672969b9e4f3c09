use thiserror::Error;

/// Errors raised by the statistical kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("design matrix is rank deficient (column {column} is collinear with earlier columns)")]
    Collinear { column: usize },
    #[error("model fitting failed: {0}")]
    FittingFailure(String),
}

/// A single violated constraint in a scenario configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

/// Every violation found while validating a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} invalid field(s): {}", .0.len(), join_issues(.0))]
pub struct ValidationErrors(pub Vec<FieldIssue>);

fn join_issues(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Errors surfaced by the simulation engine.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ValidationErrors),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
