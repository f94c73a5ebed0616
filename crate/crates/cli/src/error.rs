use std::fmt;

use fiberqed_core::fit::{FitError, ModelError};
use fiberqed_core::{ParamError, SpectrumError, ThermalError};

pub const INVALID: i32 = 2;
pub const SOLVER: i32 = 3;
pub const NOT_CONVERGED: i32 = 4;
pub const DEGENERATE: i32 = 5;
pub const LOCK_LOST: i32 = 6;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn invalid(msg: impl fmt::Display) -> Self {
        Self::new(INVALID, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(INVALID, e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(INVALID, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(INVALID, e)
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::new(INVALID, e)
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        let code = match e {
            SpectrumError::NonMonotoneGrid { .. } => INVALID,
            SpectrumError::Solver { .. } => SOLVER,
        };
        Self::new(code, e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::Solver { .. } => SOLVER,
            ModelError::Parameters(_) => INVALID,
        };
        Self::new(code, e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        let code = match &e {
            FitError::NotConverged(_) => NOT_CONVERGED,
            FitError::Degenerate { .. } => DEGENERATE,
            FitError::ModelEvaluationFailed(ModelError::Solver { .. }) => SOLVER,
            _ => INVALID,
        };
        Self::new(code, e)
    }
}

impl From<ThermalError> for CliError {
    fn from(e: ThermalError) -> Self {
        let code = match e {
            ThermalError::LockLost { .. } => LOCK_LOST,
            _ => INVALID,
        };
        Self::new(code, e)
    }
}
