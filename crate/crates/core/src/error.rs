use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("episode horizon exceeded (t = {t}, horizon = {horizon})")]
    HorizonExceeded { t: usize, horizon: usize },

    #[error("empty batch: at least one trajectory is required")]
    EmptyBatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("search space too large: {0}")]
    SearchTooLarge(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl ToString) -> Self {
        Error::Parse { what: what.into(), msg: msg.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
