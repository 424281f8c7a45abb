use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("picard sweeps did not contract on window {window} (cells {start}..{end}) after {iterations} sweeps, residual {residual:e}")]
    NonContraction {
        window: usize,
        start: usize,
        end: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("running cost is not coercive: {0}")]
    NonCoercive(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
