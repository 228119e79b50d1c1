use std::fmt;

use greenrec_core::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    /// 0 ok, 2 config error, 3 numerical degeneracy, 4 cap exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                Error::CapExceeded(_) => 4,
                Error::InvalidArgument(_)
                | Error::Graph(_)
                | Error::NotPowerOfTwo(_)
                | Error::Normalization(_)
                | Error::ZeroVariance(_)
                | Error::OutOfBand { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
