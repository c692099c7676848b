//! Command-line harness: configuration, scenario scripts, reports, deed
//! import and price-data analysis over the deedchain ledger.

use thiserror::Error;

pub mod analyze;
pub mod config;
pub mod deeds;
pub mod report;
pub mod scenario;

pub use report::{render_report, Format, RunReport};
pub use scenario::{run_scenario, RunOptions, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("unknown format '{0}'")]
    UnknownFormat(String),
    #[error("{0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Analytics(#[from] deedchain_analytics::AnalyticsError),
    #[error(transparent)]
    Chain(#[from] deedchain_core::ChainError),
    #[error(transparent)]
    Fault(#[from] deedchain_core::ChainFault),
    #[error(transparent)]
    Persist(#[from] deedchain_core::persist::PersistError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
