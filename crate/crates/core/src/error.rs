use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("region {x},{y} {w}x{h} exceeds image bounds {width}x{height}")]
    Bounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// Failure tied to one entry of an image series.
    #[error("series entry '{label}': {source}")]
    Entry {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Io,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::Input(_)
            | Error::State(_)
            | Error::Bounds { .. }
            | Error::Validation(_) => ErrorKind::Input,
            Error::Io { .. } | Error::Decode { .. } => ErrorKind::Io,
            Error::Invariant(_) => ErrorKind::Internal,
            Error::Entry { source, .. } => source.kind(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn entry(label: &str, source: Error) -> Self {
        Error::Entry {
            label: label.to_owned(),
            source: Box::new(source),
        }
    }
}
