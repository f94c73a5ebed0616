//! All-pass fiber ring model for empty-cavity characterization.
//!
//! A single coupler with self-coupling amplitude `t` closes a loop whose
//! round-trip amplitude transmission is `a`. The through-port transmission is
//!
//! ```text
//! T(ν) = |(t - a e^{iφ}) / (1 - t a e^{iφ})|²,   φ = 2π (ν - ν₀) / FSR.
//! ```
//!
//! Field amplitudes are taken to decay per round trip as `e^{-κ t_rt}`, so
//! `κ_ex = -ln(t)·FSR` and `κ_i = -ln(a)·FSR` with `t_rt = 1/FSR`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{CavityParams, ParamError};

/// Below this finesse the Lorentzian rate mapping is not trusted.
pub const MIN_MAPPING_FINESSE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RingError {
    #[error("self-coupling amplitude must lie in (0, 1), got {0}")]
    InvalidCoupler(f64),
    #[error("round-trip amplitude must lie in (0, 1], got {0}")]
    InvalidRoundTrip(f64),
    #[error("free spectral range must be positive, got {0} Hz")]
    InvalidFsr(f64),
    #[error("finesse {0:.2} is too low for the rate mapping (needs > {MIN_MAPPING_FINESSE})")]
    FinesseTooLow(f64),
    #[error("on-resonance transmission must lie in [0, 1), got {0}")]
    InvalidDepth(f64),
    #[error("finesse must be positive, got {0}")]
    InvalidFinesse(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingModel {
    t_coupler: f64,
    a_roundtrip: f64,
    fsr: f64,
    detuning_offset: f64,
}

impl RingModel {
    /// `fsr` and `detuning_offset` in Hz.
    pub fn new(t_coupler: f64, a_roundtrip: f64, fsr: f64, detuning_offset: f64) -> Result<Self, RingError> {
        if !(t_coupler > 0.0 && t_coupler < 1.0) {
            return Err(RingError::InvalidCoupler(t_coupler));
        }
        if !(a_roundtrip > 0.0 && a_roundtrip <= 1.0) {
            return Err(RingError::InvalidRoundTrip(a_roundtrip));
        }
        if !(fsr.is_finite() && fsr > 0.0) {
            return Err(RingError::InvalidFsr(fsr));
        }
        Ok(Self {
            t_coupler,
            a_roundtrip,
            fsr,
            detuning_offset: if detuning_offset.is_finite() {
                detuning_offset
            } else {
                0.0
            },
        })
    }

    /// Ring whose amplitudes reproduce the given angular decay rates.
    pub fn from_rates(kappa_i: f64, kappa_ex: f64, fsr: f64, detuning_offset: f64) -> Result<Self, RingError> {
        Self::new((-kappa_ex / fsr).exp(), (-kappa_i / fsr).exp(), fsr, detuning_offset)
    }

    pub fn from_cavity(cavity: &CavityParams, detuning_offset: f64) -> Result<Self, RingError> {
        Self::from_rates(cavity.kappa_i(), cavity.kappa_ex(), cavity.fsr(), detuning_offset)
    }

    /// Alternative parameterization by finesse, FSR and on-resonance
    /// transmission, resolved on the undercoupled side (`a ≤ t`).
    pub fn from_finesse(finesse: f64, fsr: f64, on_resonance: f64, detuning_offset: f64) -> Result<Self, RingError> {
        if !(finesse.is_finite() && finesse > 0.0) {
            return Err(RingError::InvalidFinesse(finesse));
        }
        if !(0.0..1.0).contains(&on_resonance) {
            return Err(RingError::InvalidDepth(on_resonance));
        }
        // π√x / (1 - x) = F  ⇒  x = ta, with s = √x solving F s² + π s - F = 0.
        let s = (-PI + (PI * PI + 4.0 * finesse * finesse).sqrt()) / (2.0 * finesse);
        let product = s * s;
        // (t - a) / (1 - ta) = √T₀.
        let diff = on_resonance.sqrt() * (1.0 - product);
        let t = 0.5 * (diff + (diff * diff + 4.0 * product).sqrt());
        Self::new(t, t - diff, fsr, detuning_offset)
    }

    pub fn t_coupler(&self) -> f64 {
        self.t_coupler
    }

    pub fn a_roundtrip(&self) -> f64 {
        self.a_roundtrip
    }

    pub fn fsr(&self) -> f64 {
        self.fsr
    }

    pub fn detuning_offset(&self) -> f64 {
        self.detuning_offset
    }

    /// Round-trip phase at frequency `nu` (Hz).
    pub fn phase(&self, nu: f64) -> f64 {
        TAU * (nu - self.detuning_offset) / self.fsr
    }

    /// Through-port intensity transmission at `nu` (Hz).
    pub fn transmission(&self, nu: f64) -> f64 {
        let e = Complex64::from_polar(1.0, self.phase(nu));
        let (t, a) = (self.t_coupler, self.a_roundtrip);
        ((t - a * e) / (1.0 - t * a * e)).norm_sqr()
    }

    /// `((t - a)/(1 - ta))²`, the minimum of the transmission.
    pub fn on_resonance_transmission(&self) -> f64 {
        let (t, a) = (self.t_coupler, self.a_roundtrip);
        ((t - a) / (1.0 - t * a)).powi(2)
    }

    /// `((t + a)/(1 + ta))²`, the transmission half way between resonances.
    pub fn anti_resonance_transmission(&self) -> f64 {
        let (t, a) = (self.t_coupler, self.a_roundtrip);
        ((t + a) / (1.0 + t * a)).powi(2)
    }

    /// `π√(ta) / (1 - ta)`.
    pub fn finesse(&self) -> f64 {
        let x = self.t_coupler * self.a_roundtrip;
        PI * x.sqrt() / (1.0 - x)
    }

    /// Resonance FWHM in Hz, `FSR / finesse`.
    pub fn linewidth(&self) -> f64 {
        self.fsr / self.finesse()
    }

    pub fn is_undercoupled(&self) -> bool {
        self.a_roundtrip < self.t_coupler
    }

    /// `(κ_i, κ_ex)` in rad/s.
    pub fn rates(&self) -> Result<(f64, f64), RingError> {
        let finesse = self.finesse();
        if !(finesse > MIN_MAPPING_FINESSE) {
            return Err(RingError::FinesseTooLow(finesse));
        }
        Ok((-self.a_roundtrip.ln() * self.fsr, -self.t_coupler.ln() * self.fsr))
    }

    /// Cavity parameters for the mapped rates, keeping `lambda_p`.
    pub fn to_cavity(&self, lambda_p: f64) -> Result<CavityParams, RingCavityError> {
        let (kappa_i, kappa_ex) = self.rates()?;
        Ok(CavityParams::new(kappa_i, kappa_ex, self.fsr, lambda_p)?)
    }
}

#[derive(Debug, Error)]
pub enum RingCavityError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Params(#[from] ParamError),
}
