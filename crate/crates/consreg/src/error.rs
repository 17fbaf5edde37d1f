use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad flags or flag combinations; exit code 2.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] consreg_core::Error),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {kind}", .path.display())]
    Data { path: PathBuf, kind: DataError },

    #[error("model file: {0}")]
    ModelFile(#[from] ModelFileError),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Problems with a CSV file's schema or contents.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing header row")]
    MissingHeader,

    #[error("column {name:?} does not start with x_, s_ or y_")]
    UnknownColumn { name: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column:?}: {value:?} is not a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}, column {column:?}: non-finite value")]
    NonFinite { line: u64, column: String },

    #[error("no y_ columns")]
    NoTargets,

    #[error("no data rows")]
    NoRows,

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] consreg_core::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unsupported format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
