use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("parse error at line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("unsupported raster format {0}")]
    UnsupportedFormat(String),

    #[error("kernel file has bad magic {found:?}, expected \"LCK1\"")]
    BadMagic { found: String },

    #[error("kernel dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot normalize: {0}")]
    Normalization(String),

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
