use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{context}row {row}: potential {potential} does not increase over previous {previous}")]
    NonMonotonicPotential {
        context: String,
        row: usize,
        previous: f64,
        potential: f64,
    },

    #[error("{context}row {row}: non-finite value {value}")]
    NonFinite {
        context: String,
        row: usize,
        value: f64,
    },

    #[error("profile has no samples")]
    EmptyProfile,

    #[error("no sample of profile `{id}` lies in potential range [{lo}, {hi}]")]
    EmptySlice { id: String, lo: f64, hi: f64 },

    #[error("invalid potential range: lo {lo} must be below hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),

    #[error("entropic index q must be positive and finite, got {0}")]
    InvalidQ(f64),

    #[error("invalid q grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("need at least {needed} vectors, got {actual}")]
    TooFewVectors { needed: usize, actual: usize },

    #[error("component count {k} out of range 1..={max}")]
    ComponentsOutOfRange { k: usize, max: usize },

    #[error("eigen solver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("training needs at least 2 classes, got {0}")]
    SingleClass(usize),

    #[error("class `{label}` has {count} training samples, at least 2 required")]
    ClassTooSmall { label: String, count: usize },

    #[error("feature vector `{0}` has no class label")]
    MissingLabel(String),

    #[error("invalid label `{0}`: labels must be non-empty and free of ',', '=' and whitespace")]
    InvalidLabel(String),

    #[error("invalid fold count {k} for {samples} samples")]
    InvalidFolds { k: usize, samples: usize },

    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),

    #[error("model file line {line}: {message}")]
    Model { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
