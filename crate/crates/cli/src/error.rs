use std::path::PathBuf;

use fairgate_core::Error as CoreError;
use fairgate_fhe::FheError;
use fairgate_protocol::ProtocolError;
use thiserror::Error;

/// Process exit status. `Flagged` is a successful run that found proxies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Flagged = 2,
    Usage = 64,
    Data = 65,
    Internal = 70,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: CoreError,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Fhe(#[from] FheError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Usage(_) => Exit::Usage,
            CliError::Input { .. } => Exit::Data,
            CliError::Core(e) => core_exit(e),
            CliError::Protocol(ProtocolError::Core(e)) => core_exit(e),
            CliError::Protocol(ProtocolError::Config(_)) => Exit::Usage,
            CliError::Output { .. } | CliError::Fhe(_) | CliError::Protocol(_) => Exit::Internal,
        }
    }
}

fn core_exit(e: &CoreError) -> Exit {
    match e {
        CoreError::Io { .. }
        | CoreError::Malformed { .. }
        | CoreError::UnknownLevel { .. }
        | CoreError::DuplicateLabel(_)
        | CoreError::TooFewLevels { .. }
        | CoreError::NoTarget
        | CoreError::MissingFeature(_)
        | CoreError::RankDeficient { .. }
        | CoreError::TooFewRows { .. } => Exit::Data,
        CoreError::UnknownLabel(_) | CoreError::InvalidArgument(_) => Exit::Usage,
        _ => Exit::Internal,
    }
}
