use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration or command-line arguments (exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// Malformed or missing input data (exit code 3).
    #[error("data error: {0}")]
    Data(String),
    /// Numerical abort: NaN loss, degenerate block denominator, empty
    /// softmax row (exit code 4).
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}
