use std::path::PathBuf;

use rpts_congest::SimError;
use rpts_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_TIE: u8 = 5;
pub const EXIT_BUDGET: u8 = 6;
pub const EXIT_INVALID: u8 = 7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Parse(_) => EXIT_PARSE,
        CoreError::TieDetected { .. } | CoreError::TieUnresolved { .. } => EXIT_TIE,
        CoreError::BudgetExceeded { .. } | CoreError::BudgetViolation { .. } => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => core_code(e),
            CliError::Sim(SimError::Core(e)) => core_code(e),
            CliError::Sim(SimError::Nondeterminism { .. }) => EXIT_TIE,
            CliError::Sim(
                SimError::CapExceeded { .. }
                | SimError::MessageTooLarge { .. }
                | SimError::RoundLimit { .. },
            ) => EXIT_BUDGET,
            CliError::Sim(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
