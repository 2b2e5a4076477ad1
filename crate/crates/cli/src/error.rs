use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Numerical(_) => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}

impl From<parisian_ctmc::Error> for CliError {
    fn from(e: parisian_ctmc::Error) -> Self {
        use parisian_ctmc::Error as E;
        match e {
            E::Config { field, message } => CliError::Config { field, message },
            E::Domain(m) | E::Usage(m) => CliError::Usage(m),
            E::Numerical(m) => CliError::Numerical(m),
        }
    }
}
