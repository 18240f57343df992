use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A configuration value is inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),
    /// A power calibration could not be performed.
    #[error("calibration error: {0}")]
    Calibration(String),
    /// A sample block does not have the expected length or alignment.
    #[error("framing error: {0}")]
    Framing(String),
    /// A statistic could not be estimated from the data.
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("trial {trial} at sweep point {point}: {source}")]
    Trial {
        point: usize,
        trial: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failures.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Argument(_) => true,
            Error::Trial { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
