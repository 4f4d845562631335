use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 5,
        })
    }
}

impl From<femtoflow::Error> for CliError {
    fn from(e: femtoflow::Error) -> Self {
        use femtoflow::Error as E;
        match e {
            E::Validation(_)
            | E::InvalidChannelSplit { .. }
            | E::InvalidConfig(_)
            | E::OutOfSupport { .. }
            | E::DegenerateSplit(_)
            | E::StateSpaceTooLarge { .. } => CliError::Validation(e.to_string()),
            E::NoConvergence { .. }
            | E::SingularSystem
            | E::BalanceDivergence { .. }
            | E::NonFiniteRate { .. }
            | E::NegativeTraffic(_)
            | E::NonFiniteSample => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
