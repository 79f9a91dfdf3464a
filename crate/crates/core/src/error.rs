use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum MobError {
    #[error("embedding set must have n >= 1 and d >= 1 (got n={n}, d={d})")]
    EmptyShape { n: usize, d: usize },

    #[error("data length {len} does not match n*d = {n}*{d}")]
    ShapeMismatch { len: usize, n: usize, d: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("row {row} has norm {norm:e}, cannot normalize a zero vector")]
    ZeroVector { row: usize, norm: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operation requires a non-empty set")]
    EmptySet,

    #[error("operation requires row-normalized embeddings")]
    NotNormalized,

    #[error("index {index} out of range for {n} rows")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("budget {budget} exceeds the {available} rows still available")]
    BudgetExceedsPopulation { budget: usize, available: usize },

    #[error("budget K={0} is too small for the coupling heuristic")]
    BudgetTooSmall(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("instance too large for exhaustive search: n={n} (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("infeasible coupling target: {0}")]
    InfeasibleEta(String),

    #[error("bad magic {0:?}, expected \"MOBE\"")]
    BadMagic([u8; 4]),

    #[error("unsupported MOBE version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported MOBE dtype {0}")]
    UnsupportedDtype(u8),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("trailing bytes after payload: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: u64, found: u64 },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MobError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MobError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem or malformed files rather
    /// than by invalid parameters.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            MobError::Io { .. }
                | MobError::Parse { .. }
                | MobError::BadMagic(_)
                | MobError::UnsupportedVersion(_)
                | MobError::UnsupportedDtype(_)
                | MobError::TruncatedPayload { .. }
                | MobError::TrailingBytes { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, MobError>;
