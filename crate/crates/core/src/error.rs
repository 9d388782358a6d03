use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch{}: expected {expected}, found {found}", context_suffix(.context))]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value {value} at parameter {parameter}, draw {draw}, machine {machine}")]
    NonFiniteValue {
        parameter: usize,
        draw: usize,
        machine: usize,
        value: f64,
    },

    #[error("machine {machine} has zero variance in parameter {parameter}")]
    DegenerateChain { machine: usize, parameter: usize },

    #[error("sample has zero spread")]
    ZeroSpread,

    #[error("covariance matrix is singular: {0}")]
    SingularCovariance(String),

    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("cannot split {rows} rows into {shards} shards")]
    TooManyShards { rows: usize, shards: usize },

    #[error("data value {value} at row {row} is not positive")]
    NonPositiveData { row: usize, value: f64 },

    #[error("design matrix is not full column rank")]
    RankDeficientDesign,

    #[error("mode search did not converge after {0} iterations")]
    ModeSearchFailed(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("file not found: {}", .0.display())]
    FileMissing(PathBuf),

    #[error("{}:{line}:{column}: {message}", .file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" in {context}")
    }
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    /// Short stable identifier, used as the machine-readable prefix of CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonFiniteValue { .. } => "non-finite-value",
            Error::DegenerateChain { .. } => "degenerate-chain",
            Error::ZeroSpread => "zero-spread",
            Error::SingularCovariance(_) => "singular-covariance",
            Error::NonPositiveBandwidth(_) => "non-positive-bandwidth",
            Error::TooManyShards { .. } => "too-many-shards",
            Error::NonPositiveData { .. } => "non-positive-data",
            Error::RankDeficientDesign => "rank-deficient-design",
            Error::ModeSearchFailed(_) => "mode-search-failed",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::FileMissing(_) => "file-missing",
            Error::Parse { .. } => "parse-error",
            Error::Io { .. } => "io-error",
        }
    }

    /// Process exit code: 1 usage, 2 data or validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::DegenerateChain { .. }
            | Error::ZeroSpread
            | Error::SingularCovariance(_)
            | Error::RankDeficientDesign
            | Error::ModeSearchFailed(_) => 3,
            _ => 2,
        }
    }
}
