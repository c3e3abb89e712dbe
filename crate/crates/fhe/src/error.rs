use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FheError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("vector of length {len} exceeds {slots} slots")]
    TooLong { len: usize, slots: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("value too large to encode at scale 2^{scale_log2:.1}")]
    Overflow { scale_log2: f64 },
    #[error("level exhausted: operation needs level >= {needed}, ciphertext is at {level}")]
    LevelExhausted { needed: usize, level: usize },
    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: f64, right: f64 },
    #[error("backend mismatch: {0} vs {1}")]
    BackendMismatch(&'static str, &'static str),
    #[error("key mismatch: ciphertext was produced under a different key set")]
    KeyMismatch,
    #[error("integrity checksum mismatch")]
    Checksum,
    #[error("inner-sum width {width} must be a power of two no larger than {slots}")]
    Width { width: usize, slots: usize },
    #[error("no rotation key for step {0}")]
    MissingRotationKey(usize),
    #[error("operation not supported by the {0} backend")]
    Unsupported(&'static str),
    #[error("malformed encoding: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, FheError>;
