use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the metric pipeline and its calibration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PLY header: {0}")]
    PlyHeader(String),

    #[error("unsupported PLY property layout: property `{property}`: {reason}")]
    PlyProperty { property: String, reason: String },

    #[error("PLY element count mismatch: {0}")]
    PlyCount(String),

    #[error("malformed PLY body: {0}")]
    PlyBody(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feature layout mismatch: expected `{expected}`, found `{found}`")]
    LayoutMismatch { expected: String, found: String },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("weight file line {line}: {message}")]
    WeightFile { line: usize, message: String },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("texture descriptors unavailable: {0}")]
    TextureUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
