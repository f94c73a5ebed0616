//! Collective-coupling bookkeeping: cooperativity, effective single-atom
//! coupling and effective atom number.

use std::f64::consts::TAU;

use crate::params::ParamError;

/// Per-atom dipole coupling strengths `g_j` (rad/s).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingList(Vec<f64>);

impl CouplingList {
    pub fn new(g_values: Vec<f64>) -> Result<Self, ParamError> {
        if let Some(&value) = g_values.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(ParamError::Negative { name: "g", value });
        }
        Ok(Self(g_values))
    }

    /// `n` identical atoms with coupling `g`.
    pub fn uniform(n: usize, g: f64) -> Result<Self, ParamError> {
        Self::new(vec![g; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `C = Σ_j g_j² / (2κγ⊥)`.
pub fn cooperativity_from_couplings(g: &CouplingList, kappa: f64, gamma_perp: f64) -> f64 {
    let sum: f64 = g.as_slice().iter().map(|g| g * g).sum();
    sum / (2.0 * kappa * gamma_perp)
}

pub fn single_atom_cooperativity(g: f64, kappa: f64, gamma_perp: f64) -> f64 {
    g * g / (2.0 * kappa * gamma_perp)
}

/// `g_eff = sqrt(γ⊥ γ∥ / (4 n_sat))`, inverting `n_sat = γ⊥γ∥ / 4g_eff²`.
pub fn g_eff_from_nsat(n_sat: f64, gamma_perp: f64, gamma_par: f64) -> f64 {
    (gamma_perp * gamma_par / (4.0 * n_sat)).sqrt()
}

pub fn n_sat_from_geff(g_eff: f64, gamma_perp: f64, gamma_par: f64) -> f64 {
    gamma_perp * gamma_par / (4.0 * g_eff * g_eff)
}

/// Effective atom number from `C = N_eff g_eff² / (2κγ⊥)`.
pub fn n_eff_from_cooperativity(cooperativity: f64, g_eff: f64, kappa: f64, gamma_perp: f64) -> f64 {
    2.0 * kappa * gamma_perp * cooperativity / (g_eff * g_eff)
}

/// Order-of-magnitude normal-mode splitting `4 sqrt(κγ⊥C) / 2π`, in Hz.
pub fn splitting_estimate(cooperativity: f64, kappa: f64, gamma_perp: f64) -> f64 {
    4.0 * (kappa * gamma_perp * cooperativity).sqrt() / TAU
}
