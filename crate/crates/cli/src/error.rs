use thiserror::Error;

use pccd_core::nn::NnError;

/// A failed command. The variant fixes the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable config, missing paths.
    #[error("{0}")]
    Usage(String),
    /// Nothing usable in the input set.
    #[error("{0}")]
    Input(String),
    /// Non-finite loss, activation or sample.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NonFiniteLoss { .. } | NnError::NonFiniteGradient | NnError::NonFiniteActivation(_) => {
                CliError::Numeric(e.to_string())
            }
            NnError::EmptyDataset => CliError::Input(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<pccd_core::Error> for CliError {
    fn from(e: pccd_core::Error) -> Self {
        match e {
            pccd_core::Error::Nn(n) => n.into(),
            pccd_core::Error::Diffusion(d) => CliError::Numeric(d.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
