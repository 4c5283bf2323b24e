use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph contains an oriented cycle")]
    Cyclic,

    #[error("cannot parse graph key {key:?}: {reason}")]
    BadKey { key: String, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: graph has {edges} edges but the configuration space has dimension {dim}")]
    DimensionMismatch { edges: usize, dim: usize },

    #[error("sample count {0} out of range")]
    SampleBound(u64),

    #[error("point is outside the propagator domain")]
    OutsideDomain,

    #[error("operands live on different graded spaces")]
    SpaceMismatch,

    #[error("invalid graded space: {0}")]
    InvalidSpace(String),

    #[error("input {0} is not homogeneous")]
    Inhomogeneous(usize),

    #[error("input is not a bivector")]
    NotBivector,

    #[error("missing weights for {0:?}")]
    MissingWeights(Vec<String>),

    #[error("weight for {0} is not exact")]
    InexactWeight(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("cache I/O error at {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt cache record at line {line}: {reason}")]
    CacheRecord { line: usize, reason: String },
}

impl Error {
    /// True for failures caused by the filesystem rather than by the mathematics.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::CacheIo { .. } | Error::CacheRecord { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
