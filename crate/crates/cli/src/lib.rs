//! Command-line front end: case files, synthetic case generation, and the
//! `aggregate`, `dispatch`, `compare` and `oracle fme` commands.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 infeasible,
//! 4 not converged (outputs are still written), 5 internal error or a
//! comparison outside tolerance.

pub mod artifacts;
pub mod case_file;
pub mod commands;
pub mod gen;

use deragg::dispatch::DispatchError;
use deragg::lin_network::AssemblyError;
use deragg::pve::PveError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => EXIT_INVALID,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<DispatchError> for CliError {
    fn from(e: DispatchError) -> Self {
        match e {
            DispatchError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            DispatchError::Model(_) | DispatchError::InvalidArgument(_) | DispatchError::InvalidRegion(_) => {
                CliError::Invalid(e.to_string())
            }
            DispatchError::Pve(p) => p.into(),
            DispatchError::Assembly(a) => a.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<AssemblyError> for CliError {
    fn from(e: AssemblyError) -> Self {
        match e {
            AssemblyError::EmptyRegion(_) => CliError::Infeasible(e.to_string()),
            AssemblyError::Model(_) => CliError::Invalid(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<PveError> for CliError {
    fn from(e: PveError) -> Self {
        match e {
            PveError::EmptyRegion => CliError::Infeasible(e.to_string()),
            PveError::Config(_) => CliError::Invalid(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json: {e}"))
    }
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    OutOfTolerance,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::NotConverged => EXIT_NOT_CONVERGED,
            Status::OutOfTolerance => EXIT_INTERNAL,
        }
    }
}
