use thiserror::Error;

/// Failures surfaced to the shell, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Consistency(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<reqo::Error> for CliError {
    fn from(e: reqo::Error) -> Self {
        use reqo::Error as E;
        match e {
            E::Input(m) | E::Parse(m) => CliError::Config(m),
            E::Json(e) => CliError::Config(e.to_string()),
            E::Capacity(m) => CliError::Capacity(m),
            E::Consistency(m) | E::StateShape(m) | E::Domain(m) => CliError::Consistency(m),
            E::Io(e) => CliError::Io(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
