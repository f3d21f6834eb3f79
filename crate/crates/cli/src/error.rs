use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Process exit codes. Stable; documented in the README.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const DIVERGED: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Every violation found, each prefixed with its field path.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("training diverged ({arm}): {source}")]
    Diverged {
        arm: String,
        #[source]
        source: relnet_core::Error,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("artifact {path} is missing")]
    Missing { path: PathBuf },

    #[error("checksum mismatch for {path}: manifest has {expected}, file has {actual}")]
    Checksum { path: PathBuf, expected: String, actual: String },

    #[error("corrupt artifact {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },

    /// The output directory holds a different completed run.
    #[error("{path} holds a completed run of a different config; pass --force to replace it")]
    Conflict { path: PathBuf },

    #[error(transparent)]
    Core(relnet_core::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid(_) | HarnessError::Conflict { .. } => exit::INVALID,
            HarnessError::Diverged { .. } => exit::DIVERGED,
            HarnessError::Io { .. }
            | HarnessError::Missing { .. }
            | HarnessError::Checksum { .. }
            | HarnessError::Corrupt { .. } => exit::IO,
            HarnessError::Core(e) => match e {
                relnet_core::Error::Validation(_) => exit::INVALID,
                relnet_core::Error::Divergence { .. } => exit::DIVERGED,
                relnet_core::Error::Io(_) | relnet_core::Error::Checkpoint(_) => exit::IO,
                _ => exit::INTERNAL,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap a training error, tagging divergence with the arm that failed.
    pub fn training(arm: &str, e: relnet_core::Error) -> Self {
        match e {
            relnet_core::Error::Divergence { .. } => HarnessError::Diverged {
                arm: arm.to_string(),
                source: e,
            },
            other => HarnessError::Core(other),
        }
    }
}

impl From<relnet_core::Error> for HarnessError {
    fn from(e: relnet_core::Error) -> Self {
        HarnessError::Core(e)
    }
}
