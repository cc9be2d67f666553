use thiserror::Error;

/// Errors raised by validation, estimation and the text file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("initial_dist: {0}")]
    InitialDist(String),

    #[error("transition row (t={t}, s={s}, a={a}): {msg}")]
    TransitionRow {
        t: usize,
        s: usize,
        a: usize,
        msg: String,
    },

    #[error("policy row (t={t}, s={s}): {msg}")]
    PolicyRow { t: usize, s: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("trajectory {index}: {msg}")]
    Trajectory { index: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by the filesystem rather than by content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
