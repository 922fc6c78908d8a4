use std::fmt;

/// Errors that end a command before a report is produced.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or inputs; exit status 2.
    Usage(String),
    /// A library error raised by an invariant check; exit status 1.
    Invariant(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<amenable::Error> for CliError {
    fn from(e: amenable::Error) -> Self {
        match e {
            amenable::Error::Invariant(m) => CliError::Invariant(m),
            amenable::Error::Usage(m) => CliError::Usage(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
