use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown level {level:?} for categorical feature {feature:?}")]
    UnknownLevel { feature: String, level: String },
    #[error("unknown feature label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate feature label {0:?}")]
    DuplicateLabel(String),
    #[error("categorical feature {feature:?} has {levels} level(s); at least 2 are required")]
    TooFewLevels { feature: String, levels: usize },
    #[error("dataset has no binary target feature")]
    NoTarget,
    #[error("feature {0:?} is not present in the dataset")]
    MissingFeature(String),
    #[error("design matrix is rank deficient (pivot {pivot} in column {column:?})")]
    RankDeficient { column: String, pivot: f64 },
    #[error("need more rows than columns: {rows} rows, {columns} columns")]
    TooFewRows { rows: usize, columns: usize },
    #[error("column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("negative standard error {0}")]
    NegativeStdError(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model has not converged ({iterations} iterations, gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
