//! Steady-state transmission, parameter estimation and thermal-lock
//! simulation for a cold-atom ensemble coupled to a fiber ring cavity.
//!
//! Rates are carried internally as angular frequencies (rad/s); files and the
//! command line use ordinary frequencies in MHz.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fit;
pub mod io;
pub mod params;
pub mod peaks;
pub mod ring;
pub mod spectrum;
pub mod steady_state;
pub mod thermal;
pub mod units;

pub use fit::{Dataset, FitError, FitResult, FitSpec, ModelKind};
pub use params::{CavityParams, Drive, DriveParams, EnsembleParams, ModelParams, ParamError, ParamFile};
pub use ring::{RingError, RingModel};
pub use spectrum::{LockCondition, SpectrumError, SpectrumPoint};
pub use steady_state::{BranchPolicy, OperatingPoint, SolveError, SteadyStateSolution, SweepDirection};
pub use thermal::{LockConfig, ThermalError, ThermalParams, ThermalState};
