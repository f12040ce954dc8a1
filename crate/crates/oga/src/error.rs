use std::path::PathBuf;

use oga_core::generate::GenError;
use oga_core::scenario::ScenarioError;
use oga_core::sim::{BreachKind, ConfigError, Termination};

use crate::matrix::MatrixError;
use crate::scenario_file::ScenarioFileError;

/// Process exit status. The numbers are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    /// Bad command line (reported by the argument parser).
    Usage = 2,
    /// A scenario, matrix or override failed to parse or validate.
    InvalidInput = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// The random generator could not place every agent.
    Generation = 5,
    /// A run hit the horizon before converging.
    Timeout = 10,
    /// A run ended with two agents closer than the minimum separation.
    Collision = 11,
    /// A run ended with an agent on or outside the workspace boundary.
    Boundary = 12,
    /// At least one run of a batch did not converge.
    BatchFailures = 13,
    /// The simulator reported an inconsistency.
    Internal = 70,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Status for a finished run.
    pub fn of_termination(t: &Termination) -> Self {
        match t {
            Termination::Converged => ExitCode::Success,
            Termination::Timeout => ExitCode::Timeout,
            Termination::Breach {
                kind: BreachKind::Collision(_),
                ..
            } => ExitCode::Collision,
            Termination::Breach {
                kind: BreachKind::Boundary(_),
                ..
            } => ExitCode::Boundary,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    ScenarioFile(#[from] ScenarioFileError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid simulation settings: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Matrix(#[from] MatrixError),
    #[error("{0}")]
    Generate(GenError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("simulation failed: {0}")]
    Internal(String),
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Invalid(s) => CliError::Scenario(s),
            other => CliError::Generate(other),
        }
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::ScenarioFile(ScenarioFileError::Io { .. }) | CliError::Io { .. } => {
                ExitCode::Io
            }
            CliError::ScenarioFile(_)
            | CliError::Scenario(_)
            | CliError::Config(_)
            | CliError::Matrix(_) => ExitCode::InvalidInput,
            CliError::Generate(_) => ExitCode::Generation,
            CliError::Usage(_) => ExitCode::Usage,
            CliError::Internal(_) => ExitCode::Internal,
        }
    }
}
