use std::path::PathBuf;

use ncsched_core::metrics::MetricsError;
use ncsched_core::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for a violated runtime
    /// invariant, 1 for I/O trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Parse(_) | HarnessError::Config(_) => 2,
            HarnessError::Sim(SimError::Invariant { .. }) => 3,
            HarnessError::Sim(_) => 2,
            HarnessError::Metrics(MetricsError::NoArrivals) => 2,
            HarnessError::Metrics(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}
