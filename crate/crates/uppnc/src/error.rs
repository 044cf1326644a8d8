use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("indeterminate sum of +inf and -inf")]
    InfinityClash,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed value {0:?}")]
    Parse(String),
    #[error("line {line}: {msg}")]
    ParseLine { line: usize, msg: String },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("interval is unbounded")]
    Unbounded,
    #[error("result is not ultimately pseudo-periodic: {0}")]
    NotPlain(String),
    #[error("closure did not stabilize: {0}")]
    Divergence(String),
    #[error("time budget exceeded")]
    BudgetExceeded,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
