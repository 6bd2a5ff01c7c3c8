use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("line {line}: {reason}")]
    Data { line: u64, reason: String },

    #[error(transparent)]
    Library(#[from] heavycs::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(
                heavycs::Error::NonConvergence { .. } | heavycs::Error::NonFinite(_),
            ) => 3,
            _ => 2,
        }
    }

    /// Attach an input line number to a library error raised by that row.
    pub fn at_line(self, line: u64) -> Self {
        match self {
            CliError::Library(e) if CliError::Library(e.clone()).exit_code() == 2 => {
                CliError::Data {
                    line,
                    reason: e.to_string(),
                }
            }
            other => other,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
