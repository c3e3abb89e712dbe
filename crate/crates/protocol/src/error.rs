use thiserror::Error;

use crate::frame::MessageKind;

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported frame version {0}")]
    BadVersion(u8),
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("payload checksum mismatch (expected {expected:08x}, got {actual:08x})")]
    Crc { expected: u32, actual: u32 },
    #[error("truncated frame: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("payload of {len} bytes exceeds the {limit}-byte limit")]
    Oversize { len: u64, limit: u64 },
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("frame error: {0}")]
    Frame(#[from] FrameError),
    #[error("transport error: {0}")]
    Io(#[from] std::io::Error),
    #[error("peer disconnected")]
    Disconnected,
    #[error("encryption error: {0}")]
    Fhe(#[from] fairgate_fhe::FheError),
    #[error("{0}")]
    Core(#[from] fairgate_core::Error),
    #[error("unexpected {kind} message in state {state}")]
    UnexpectedMessage { state: &'static str, kind: MessageKind },
    #[error("{kind} carries round {got} in round {current}")]
    BadRound { kind: MessageKind, current: u32, got: u32 },
    #[error("malformed {kind} body: {reason}")]
    Malformed { kind: MessageKind, reason: String },
    #[error("missing leave-one-out model for {0:?}")]
    MissingLoo(String),
    #[error("session configuration digest mismatch")]
    ConfigMismatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("recode policy did not shrink the unprotected set: {0}")]
    Policy(String),
    #[error("learner: {0}")]
    Learn(String),
}
