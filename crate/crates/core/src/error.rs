use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("no trade flows for year {0}")]
    EmptyYear(i32),

    #[error("duplicate panel key ({country}, {year})")]
    DuplicateKey { country: String, year: i32 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("export matrix has no strictly positive entry")]
    AllZero,

    #[error("pruning removed every row and column")]
    EmptyAfterPruning,

    #[error("unpruned matrix: {axis} '{label}' has no nonzero entry")]
    UnprunedMatrix { axis: &'static str, label: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in dimension '{0}'")]
    ZeroVariance(String),

    #[error("rank-deficient design; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("empty growth panel ({0})")]
    EmptyPanel(String),

    #[error("generator failed: {0}")]
    Generator(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::UnprunedMatrix { .. }
            | Error::DimensionMismatch(_)
            | Error::ZeroVariance(_)
            | Error::RankDeficient(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
