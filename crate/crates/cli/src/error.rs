use thiserror::Error;

use crate::ingest::IngestError;

/// Process exit codes. Stable across releases.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NO_FEASIBLE_COST: i32 = 3;
    pub const MIN_SAMPLE_SIZE: i32 = 4;
    pub const PARSE: i32 = 5;
    pub const REPLAY_MISMATCH: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] npcs::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("replay differs from the recorded report: {0}")]
    ReplayMismatch(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                npcs::Error::NoFeasibleCost { .. } => exit::NO_FEASIBLE_COST,
                npcs::Error::MinSampleSize { .. } => exit::MIN_SAMPLE_SIZE,
                npcs::Error::InvalidInput(_)
                | npcs::Error::IncompatibleApproach { .. }
                | npcs::Error::InsufficientClass0 { .. }
                | npcs::Error::EmptyClass { .. } => exit::USAGE,
                _ => exit::INTERNAL,
            },
            CliError::Ingest(_) | CliError::Json { .. } => exit::PARSE,
            CliError::Usage(_) => exit::USAGE,
            CliError::ReplayMismatch(_) => exit::REPLAY_MISMATCH,
            CliError::Io { .. } | CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
