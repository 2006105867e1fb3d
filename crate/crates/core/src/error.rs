use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("unlabeled records present: {}", ids.join(", "))]
    Unlabeled { ids: Vec<String> },

    #[error("duplicate record id `{0}`")]
    DuplicateId(String),

    #[error("vocabulary is empty after applying min_df = {min_df}")]
    EmptyVocabulary { min_df: usize },

    #[error("every document is empty after vocabulary filtering")]
    EmptyCorpus,

    #[error("cannot balance one class: only {0} present")]
    SingleClass(&'static str),

    #[error("non-finite feature values in columns: {}", columns.join(", "))]
    NonFinite { columns: Vec<String> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("row-count mismatch across feature blocks: {0}")]
    BlockMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dictionary line {line}: {message}")]
    Dictionary { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorKind::Config,
            Error::Numerical(_) | Error::NonFinite { .. } => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

/// Attaches a pipeline stage label to errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
