use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("unsupported format version {found} in {path} (supported: {supported})")]
    UnsupportedVersion {
        path: PathBuf,
        found: u32,
        supported: u32,
    },

    #[error("truncated file {path}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("non-finite value in sample {sample}")]
    NonFinite { sample: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("dimension mismatch: {what} has dim {left}, {other} has dim {right}")]
    DimMismatch {
        what: &'static str,
        left: usize,
        other: &'static str,
        right: usize,
    },

    #[error("sample count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    #[error("sample id mismatch at index {index}: {left:?} vs {right:?}")]
    IdMismatch {
        index: usize,
        left: String,
        right: String,
    },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("{path}:{line}: unknown label {label:?} (expected private or public)")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },

    #[error("{path}:{line}: malformed label record {record:?}")]
    MalformedLabel {
        path: PathBuf,
        line: usize,
        record: String,
    },

    #[error("label file {0} has no records")]
    EmptyLabels(PathBuf),

    #[error("no label for sample {0:?}")]
    MissingLabel(String),

    #[error("invalid k-means configuration: {0}")]
    KMeansConfig(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("invalid classifier configuration: {0}")]
    ClassifierConfig(String),

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
