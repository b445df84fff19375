use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error{}: {source}", path.as_ref().map(|p| format!(" ({})", p.display())).unwrap_or_default())]
    Io {
        #[source]
        source: std::io::Error,
        path: Option<PathBuf>,
    },

    /// A file did not match its declared on-disk format (bad magic, bad
    /// version, truncation, unparseable field).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration (ratios not summing to 1, overlapping attack
    /// segments, unknown labels, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Tensor/layer dimension mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// A training or evaluation run failed (non-finite loss, missing class).
    #[error("run failure: {0}")]
    Run(String),
}

impl Error {
    pub(crate) fn io(source: std::io::Error, path: impl Into<PathBuf>) -> Self {
        Error::Io {
            source,
            path: Some(path.into()),
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn run(msg: impl Into<String>) -> Self {
        Error::Run(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { source, path: None }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
