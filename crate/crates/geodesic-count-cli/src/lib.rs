//! Library side of the `geodesic-count` binary: configuration, the sieve
//! cache and the subcommands.

pub mod cache;
pub mod commands;
pub mod config;

use geodesic_count::counting::CountingError;
use geodesic_count::quadfield::QuadFieldError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<cache::CacheError> for CliError {
    fn from(e: cache::CacheError) -> Self {
        CliError::Resource(e.to_string())
    }
}

impl From<QuadFieldError> for CliError {
    fn from(e: QuadFieldError) -> Self {
        match e {
            QuadFieldError::Overflow => CliError::Usage(e.to_string()),
            QuadFieldError::OutOfRange { .. } | QuadFieldError::Allocation(_) => CliError::Resource(e.to_string()),
        }
    }
}

impl From<CountingError> for CliError {
    fn from(e: CountingError) -> Self {
        match e {
            CountingError::SieveRange { .. } => CliError::Resource(e.to_string()),
            CountingError::QuadField(q) => q.into(),
            CountingError::CrossCheck { .. } => CliError::Verification(e.to_string()),
            CountingError::DegenerateFit(_) | CountingError::NotPrime(_) | CountingError::Grid(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Resource(format!("writing CSV: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Resource(e.to_string())
    }
}
