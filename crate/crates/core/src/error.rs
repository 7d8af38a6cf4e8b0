use std::fmt;

/// Which precondition a failed operation tripped over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    DimensionMismatch,
    NonfiniteInput,
    InvalidConfig,
    DegenerateColumn,
    Io,
    Parse,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::DimensionMismatch => "dimension_mismatch",
            ErrorKind::NonfiniteInput => "nonfinite_input",
            ErrorKind::InvalidConfig => "invalid_config",
            ErrorKind::DegenerateColumn => "degenerate_column",
            ErrorKind::Io => "io_error",
            ErrorKind::Parse => "parse_error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input: {0}")]
    NonfiniteInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate column: {0}")]
    DegenerateColumn(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl SolverError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            SolverError::DimensionMismatch(_) => ErrorKind::DimensionMismatch,
            SolverError::NonfiniteInput(_) => ErrorKind::NonfiniteInput,
            SolverError::InvalidConfig(_) => ErrorKind::InvalidConfig,
            SolverError::DegenerateColumn(_) => ErrorKind::DegenerateColumn,
            SolverError::Io(_) => ErrorKind::Io,
            SolverError::Parse(_) => ErrorKind::Parse,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            SolverError::DimensionMismatch(m)
            | SolverError::NonfiniteInput(m)
            | SolverError::InvalidConfig(m)
            | SolverError::DegenerateColumn(m)
            | SolverError::Io(m)
            | SolverError::Parse(m) => m,
        }
    }
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SolverError {
    SolverError::InvalidConfig(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> SolverError {
    SolverError::DimensionMismatch(msg.into())
}
