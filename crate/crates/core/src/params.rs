//! Validated physical parameters for the cavity, the atomic ensemble and the
//! probe drive, plus the JSON parameter-file schema.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{self, angular_to_mhz, mhz_to_angular, PLANCK, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("{name} must be finite and non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("exactly one of input power or drive amplitude must be given")]
    AmbiguousDrive,
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("transverse decay rate {gamma_perp_mhz} MHz is below half the population decay rate {gamma_par_mhz} MHz")]
    NegativeDephasing { gamma_perp_mhz: f64, gamma_par_mhz: f64 },
    #[error("ensemble specifies both gamma_d_mhz and gamma_perp_mhz")]
    AmbiguousDephasing,
    #[error("parameter file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parameter file: {0}")]
    Io(#[from] std::io::Error),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ParamError::NonPositiveRate { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ParamError::Negative { name, value })
    }
}

/// Ring-cavity rates and geometry. Rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityParams {
    kappa_i: f64,
    kappa_ex: f64,
    fsr: f64,
    lambda_p: f64,
}

impl CavityParams {
    /// `kappa_i`, `kappa_ex` in rad/s, `fsr` in Hz, `lambda_p` in m.
    pub fn new(kappa_i: f64, kappa_ex: f64, fsr: f64, lambda_p: f64) -> Result<Self, ParamError> {
        Ok(Self {
            kappa_i: positive("kappa_i", kappa_i)?,
            kappa_ex: positive("kappa_ex", kappa_ex)?,
            fsr: positive("fsr", fsr)?,
            lambda_p: positive("lambda_p", lambda_p)?,
        })
    }

    /// Boundary-unit constructor: decay rates as `κ/2π` in MHz, FSR in MHz,
    /// wavelength in nm.
    pub fn from_mhz(kappa_i_mhz: f64, kappa_ex_mhz: f64, fsr_mhz: f64, lambda_p_nm: f64) -> Result<Self, ParamError> {
        Self::new(
            mhz_to_angular(kappa_i_mhz),
            mhz_to_angular(kappa_ex_mhz),
            fsr_mhz * 1.0e6,
            lambda_p_nm * 1.0e-9,
        )
    }

    /// The characterized nanofiber ring: κ_i/2π = 1.7 MHz, κ_ex/2π = 0.47 MHz,
    /// FSR = 148 MHz, probed at 852 nm.
    pub fn reference() -> Self {
        Self::from_mhz(1.7, 0.47, 148.0, 852.0).expect("reference cavity is valid")
    }

    pub fn kappa_i(&self) -> f64 {
        self.kappa_i
    }

    pub fn kappa_ex(&self) -> f64 {
        self.kappa_ex
    }

    /// Total field decay rate `κ = κ_i + κ_ex`.
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }

    pub fn fsr(&self) -> f64 {
        self.fsr
    }

    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }

    /// `κ_ex / κ`, the output-coupling fraction entering the transmission.
    pub fn coupling_ratio(&self) -> f64 {
        self.kappa_ex / self.kappa()
    }

    /// Intensity FWHM of a resonance, `2κ / 2π`, in Hz.
    pub fn fwhm(&self) -> f64 {
        self.kappa() / PI
    }

    pub fn finesse(&self) -> f64 {
        self.fsr / self.fwhm()
    }

    pub fn is_undercoupled(&self) -> bool {
        self.kappa_i > self.kappa_ex
    }

    pub fn round_trip_time(&self) -> f64 {
        units::round_trip_time(self.fsr)
    }

    /// Ring length implied by the FSR; informational only.
    pub fn length(&self, group_index: f64) -> f64 {
        units::cavity_length(self.fsr, group_index)
    }

    /// Photon energy at the probe wavelength (J).
    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.lambda_p
    }

    pub fn with_rates(&self, kappa_i: f64, kappa_ex: f64) -> Result<Self, ParamError> {
        Self::new(kappa_i, kappa_ex, self.fsr, self.lambda_p)
    }
}

/// Collective atomic parameters. Rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleParams {
    cooperativity: f64,
    gamma_par: f64,
    gamma_d: f64,
    n_sat: f64,
}

impl EnsembleParams {
    pub fn new(cooperativity: f64, gamma_par: f64, gamma_d: f64, n_sat: f64) -> Result<Self, ParamError> {
        Ok(Self {
            cooperativity: non_negative("cooperativity", cooperativity)?,
            gamma_par: positive("gamma_par", gamma_par)?,
            gamma_d: non_negative("gamma_d", gamma_d)?,
            n_sat: positive("n_sat", n_sat)?,
        })
    }

    /// Builds the ensemble from a directly specified `γ⊥`, deriving the
    /// dephasing rate `γ_d = γ⊥ - γ∥/2`.
    pub fn with_gamma_perp(
        cooperativity: f64,
        gamma_par: f64,
        gamma_perp: f64,
        n_sat: f64,
    ) -> Result<Self, ParamError> {
        let gamma_par = positive("gamma_par", gamma_par)?;
        let gamma_perp = positive("gamma_perp", gamma_perp)?;
        let gamma_d = gamma_perp - 0.5 * gamma_par;
        // Allow a few ulps of slack so MHz round trips do not trip the check.
        if gamma_d < -1e-12 * gamma_perp {
            return Err(ParamError::NegativeDephasing {
                gamma_perp_mhz: angular_to_mhz(gamma_perp),
                gamma_par_mhz: angular_to_mhz(gamma_par),
            });
        }
        Self::new(cooperativity, gamma_par, gamma_d.max(0.0), n_sat)
    }

    /// Fitted ensemble: C = 1.5, γ∥/2π = 5.2 MHz, γ⊥/2π = 4 MHz, n_sat = 12.7.
    pub fn reference() -> Self {
        Self::with_gamma_perp(1.5, mhz_to_angular(5.2), mhz_to_angular(4.0), 12.7).expect("reference ensemble is valid")
    }

    pub fn cooperativity(&self) -> f64 {
        self.cooperativity
    }

    pub fn gamma_par(&self) -> f64 {
        self.gamma_par
    }

    pub fn gamma_d(&self) -> f64 {
        self.gamma_d
    }

    /// `γ⊥ = γ∥/2 + γ_d`.
    pub fn gamma_perp(&self) -> f64 {
        0.5 * self.gamma_par + self.gamma_d
    }

    pub fn n_sat(&self) -> f64 {
        self.n_sat
    }

    pub fn with_cooperativity(&self, cooperativity: f64) -> Result<Self, ParamError> {
        Self::new(cooperativity, self.gamma_par, self.gamma_d, self.n_sat)
    }

    pub fn with_n_sat(&self, n_sat: f64) -> Result<Self, ParamError> {
        Self::new(self.cooperativity, self.gamma_par, self.gamma_d, n_sat)
    }

    pub fn with_gamma_perp_of(&self, gamma_perp: f64) -> Result<Self, ParamError> {
        Self::with_gamma_perp(self.cooperativity, self.gamma_par, gamma_perp, self.n_sat)
    }
}

/// How strongly the probe drives the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Input power in W.
    InputPower(f64),
    /// Dimensionless field amplitude `y`, real and non-negative.
    Amplitude(f64),
}

impl Drive {
    /// The dimensionless amplitude `y` for this drive.
    pub fn amplitude(&self, cavity: &CavityParams, n_sat: f64) -> f64 {
        match *self {
            Drive::Amplitude(y) => y,
            Drive::InputPower(p) => crate::steady_state::drive_from_power(p, cavity, n_sat).sqrt(),
        }
    }
}

/// Probe drive and detunings (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveParams {
    drive: Drive,
    delta_atom: f64,
    delta_cavity: f64,
}

impl DriveParams {
    /// Exactly one of `input_power` (W) and `amplitude` must be set.
    pub fn new(
        input_power: Option<f64>,
        amplitude: Option<f64>,
        delta_atom: f64,
        delta_cavity: f64,
    ) -> Result<Self, ParamError> {
        let drive = match (input_power, amplitude) {
            (Some(p), None) => Drive::InputPower(non_negative("input_power", p)?),
            (None, Some(y)) => Drive::Amplitude(non_negative("y", y)?),
            _ => return Err(ParamError::AmbiguousDrive),
        };
        for (name, v) in [("delta_atom", delta_atom), ("delta_cavity", delta_cavity)] {
            if !v.is_finite() {
                return Err(ParamError::Negative { name, value: v });
            }
        }
        Ok(Self {
            drive,
            delta_atom,
            delta_cavity,
        })
    }

    pub fn drive(&self) -> Drive {
        self.drive
    }

    pub fn delta_atom(&self) -> f64 {
        self.delta_atom
    }

    pub fn delta_cavity(&self) -> f64 {
        self.delta_cavity
    }

    /// `(Δc, Δa) = (Δ_cavity / κ, Δ_atom / γ⊥)`.
    pub fn normalized_detunings(&self, cavity: &CavityParams, ensemble: &EnsembleParams) -> (f64, f64) {
        (
            self.delta_cavity / cavity.kappa(),
            self.delta_atom / ensemble.gamma_perp(),
        )
    }

    pub fn amplitude(&self, cavity: &CavityParams, ensemble: &EnsembleParams) -> f64 {
        self.drive.amplitude(cavity, ensemble.n_sat())
    }
}

/// `cavity` block of a parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub kappa_i_mhz: f64,
    pub kappa_ex_mhz: f64,
    pub fsr_mhz: f64,
    #[serde(default = "default_lambda_nm")]
    pub lambda_p_nm: f64,
}

fn default_lambda_nm() -> f64 {
    852.0
}

/// `ensemble` block. Give at most one of `gamma_d_mhz` and `gamma_perp_mhz`;
/// with neither, the dephasing rate is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub cooperativity: f64,
    pub gamma_par_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_d_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_perp_mhz: Option<f64>,
    pub n_sat: f64,
}

/// `drive` block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_in_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default)]
    pub delta_atom_mhz: f64,
    #[serde(default)]
    pub delta_cavity_mhz: f64,
}

/// On-disk parameter file: flat objects in MHz / nm / W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub cavity: CavitySection,
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
}

/// Fully validated parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub cavity: CavityParams,
    pub ensemble: EnsembleParams,
    pub drive: Option<DriveParams>,
}

impl CavitySection {
    pub fn validate(&self) -> Result<CavityParams, ParamError> {
        CavityParams::from_mhz(self.kappa_i_mhz, self.kappa_ex_mhz, self.fsr_mhz, self.lambda_p_nm)
    }
}

impl EnsembleSection {
    pub fn validate(&self) -> Result<EnsembleParams, ParamError> {
        let gamma_par = mhz_to_angular(self.gamma_par_mhz);
        match (self.gamma_d_mhz, self.gamma_perp_mhz) {
            (Some(_), Some(_)) => Err(ParamError::AmbiguousDephasing),
            (None, Some(gp)) => {
                EnsembleParams::with_gamma_perp(self.cooperativity, gamma_par, mhz_to_angular(gp), self.n_sat)
            }
            (gd, None) => EnsembleParams::new(
                self.cooperativity,
                gamma_par,
                mhz_to_angular(gd.unwrap_or(0.0)),
                self.n_sat,
            ),
        }
    }
}

impl DriveSection {
    pub fn validate(&self) -> Result<DriveParams, ParamError> {
        DriveParams::new(
            self.p_in_w,
            self.y,
            mhz_to_angular(self.delta_atom_mhz),
            mhz_to_angular(self.delta_cavity_mhz),
        )
    }
}

impl ParamFile {
    pub fn reference() -> Self {
        Self {
            cavity: CavitySection {
                kappa_i_mhz: 1.7,
                kappa_ex_mhz: 0.47,
                fsr_mhz: 148.0,
                lambda_p_nm: 852.0,
            },
            ensemble: EnsembleSection {
                cooperativity: 1.5,
                gamma_par_mhz: 5.2,
                gamma_d_mhz: None,
                gamma_perp_mhz: Some(4.0),
                n_sat: 12.7,
            },
            drive: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ParamError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<ModelParams, ParamError> {
        Ok(ModelParams {
            cavity: self.cavity.validate()?,
            ensemble: self.ensemble.validate()?,
            drive: self.drive.as_ref().map(DriveSection::validate).transpose()?,
        })
    }
}
