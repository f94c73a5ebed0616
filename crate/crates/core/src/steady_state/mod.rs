//! Semiclassical steady state of the driven atom-cavity system.
//!
//! The intracavity variable `X` obeys
//!
//! ```text
//! y = i X (1 + iΔc + 4C (1 - iΔa) / (1 + Δa² + 2|X|²))
//! ```
//!
//! and the normalized transmission past the coupler is
//! `T = |1 - (2i / y)(κ_ex / κ) X|²`. Taking the modulus squared of the
//! steady-state equation gives a cubic in `u = |X|²`; its non-negative real
//! roots are the possible operating points.

pub mod coupling;
pub mod cubic;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::CavityParams;

pub use coupling::{
    cooperativity_from_couplings, g_eff_from_nsat, n_eff_from_cooperativity, n_sat_from_geff,
    single_atom_cooperativity, splitting_estimate, CouplingList,
};

/// Largest relative cubic residual accepted for a returned root.
pub const ROOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no non-negative real root found for y = {y:e}")]
    NoRealRoot { y: f64 },
    #[error("root u = {u} failed certification (relative residual {residual:e})")]
    NumericalInstability { u: f64, residual: f64 },
    #[error("transmission is undefined at zero drive; use the weak-drive form")]
    DivergentDrive,
    #[error("{name} must be finite{}, got {value}", if *.non_negative { " and non-negative" } else { "" })]
    InvalidInput {
        name: &'static str,
        value: f64,
        non_negative: bool,
    },
    #[error("follow-sweep branch selection needs a sweep context")]
    SweepContextRequired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Up,
    Down,
}

/// Which root to report when the cubic has several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Lowest intracavity intensity, the branch reached adiabatically from
    /// zero drive.
    #[default]
    Lowest,
    Highest,
    /// Stay on the branch closest to the previous point of a monotone sweep.
    FollowSweep(SweepDirection),
}

impl BranchPolicy {
    /// Picks a root from an ascending root list. With `FollowSweep` and no
    /// previous point, the lowest root starts the sweep.
    pub fn select(&self, roots: &[f64], previous: Option<f64>) -> f64 {
        debug_assert!(!roots.is_empty());
        match (self, previous) {
            (BranchPolicy::Highest, _) => roots[roots.len() - 1],
            (BranchPolicy::FollowSweep(_), Some(prev)) => roots
                .iter()
                .copied()
                .min_by(|a, b| (a - prev).abs().total_cmp(&(b - prev).abs()))
                .unwrap_or(roots[0]),
            _ => roots[0],
        }
    }
}

/// Normalized operating point of the steady-state equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Dimensionless drive amplitude `y` (real, ≥ 0).
    pub y: f64,
    /// `Δ_cavity / κ`.
    pub delta_c: f64,
    /// `Δ_atom / γ⊥`.
    pub delta_a: f64,
    pub cooperativity: f64,
}

impl OperatingPoint {
    pub fn new(y: f64, delta_c: f64, delta_a: f64, cooperativity: f64) -> Result<Self, SolveError> {
        let check = |name, value: f64, non_negative: bool| {
            if value.is_finite() && (!non_negative || value >= 0.0) {
                Ok(())
            } else {
                Err(SolveError::InvalidInput {
                    name,
                    value,
                    non_negative,
                })
            }
        };
        check("y", y, true)?;
        check("delta_c", delta_c, false)?;
        check("delta_a", delta_a, false)?;
        check("cooperativity", cooperativity, true)?;
        Ok(Self {
            y,
            delta_c,
            delta_a,
            cooperativity,
        })
    }

    /// `1 + Δa² + 2u`.
    #[inline]
    pub fn saturation_denominator(&self, u: f64) -> f64 {
        1.0 + self.delta_a * self.delta_a + 2.0 * u
    }

    /// The bracket `1 + iΔc + 4C(1 - iΔa)/(1 + Δa² + 2u)`.
    pub fn response(&self, u: f64) -> Complex64 {
        let atoms = Complex64::new(1.0, -self.delta_a) * (4.0 * self.cooperativity / self.saturation_denominator(u));
        Complex64::new(1.0, self.delta_c) + atoms
    }

    /// Coefficients (highest power first) of
    /// `u[(D + 4C)² + (Δc D - 4CΔa)²] - y² D² = 0`, `D = 1 + Δa² + 2u`.
    pub fn cubic(&self) -> [f64; 4] {
        let a0 = 1.0 + self.delta_a * self.delta_a;
        let p = a0 + 4.0 * self.cooperativity;
        let q = self.delta_c * a0 - 4.0 * self.cooperativity * self.delta_a;
        let y2 = self.y * self.y;
        [
            4.0 * (1.0 + self.delta_c * self.delta_c),
            4.0 * (p + q * self.delta_c) - 4.0 * y2,
            p * p + q * q - 4.0 * a0 * y2,
            -y2 * a0 * a0,
        ]
    }

    /// Residual of the steady-state equation at field `x`, relative to `y`.
    pub fn field_residual(&self, x: Complex64) -> f64 {
        let lhs = Complex64::i() * x * self.response(x.norm_sqr());
        let scale = if self.y > 0.0 { self.y } else { 1.0 };
        (lhs - self.y).norm() / scale
    }
}

/// Steady state at a given operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateSolution {
    /// All non-negative real roots `u = |X|²`, ascending.
    pub roots_u: Vec<f64>,
    pub selected_u: f64,
    pub field_x: Complex64,
    pub transmission: f64,
}

impl SteadyStateSolution {
    pub fn is_multistable(&self) -> bool {
        self.roots_u.len() > 1
    }
}

/// Certified non-negative real roots `u = |X|²`, ascending.
pub fn solve_intensity(point: &OperatingPoint) -> Result<Vec<f64>, SolveError> {
    if point.y == 0.0 {
        return Ok(vec![0.0]);
    }
    let coeffs = point.cubic();
    let roots: Vec<f64> = cubic::real_roots(&coeffs).into_iter().filter(|u| *u >= 0.0).collect();
    if roots.is_empty() {
        return Err(SolveError::NoRealRoot { y: point.y });
    }
    for &u in &roots {
        let residual = cubic::relative_residual(&coeffs, u);
        if !(residual < ROOT_TOLERANCE) {
            return Err(SolveError::NumericalInstability { u, residual });
        }
    }
    Ok(roots)
}

/// Inverts the steady-state equation at fixed `u`:
/// `X = y / (i (1 + iΔc + 4C(1 - iΔa)/(1 + Δa² + 2u)))`.
pub fn field_from_root(point: &OperatingPoint, u: f64) -> Complex64 {
    Complex64::new(point.y, 0.0) / (Complex64::i() * point.response(u))
}

/// `|1 - (2i/y)(κ_ex/κ) X|²`.
pub fn transmission_from_field(y: f64, coupling_ratio: f64, x: Complex64) -> f64 {
    (Complex64::new(1.0, 0.0) - Complex64::i() * (2.0 * coupling_ratio / y) * x).norm_sqr()
}

/// Full steady state with the root chosen by `policy` (and `previous`, the
/// intensity at the previous sweep point, for `FollowSweep`).
pub fn solve(
    point: &OperatingPoint,
    coupling_ratio: f64,
    policy: BranchPolicy,
    previous: Option<f64>,
) -> Result<SteadyStateSolution, SolveError> {
    if point.y == 0.0 {
        return Err(SolveError::DivergentDrive);
    }
    let roots_u = solve_intensity(point)?;
    let selected_u = policy.select(&roots_u, previous);
    let field_x = field_from_root(point, selected_u);
    let transmission = transmission_from_field(point.y, coupling_ratio, field_x);
    Ok(SteadyStateSolution {
        roots_u,
        selected_u,
        field_x,
        transmission,
    })
}

/// Transmission at a single operating point. `FollowSweep` is rejected here;
/// use [`crate::spectrum`] for sweeps.
pub fn transmission(point: &OperatingPoint, coupling_ratio: f64, policy: BranchPolicy) -> Result<f64, SolveError> {
    if let BranchPolicy::FollowSweep(_) = policy {
        return Err(SolveError::SweepContextRequired);
    }
    Ok(solve(point, coupling_ratio, policy, None)?.transmission)
}

/// Weak-drive limit
/// `|1 - (2κ_ex/κ) / (1 + iΔc + 4C(1 - iΔa)/(1 + Δa²))|²`.
pub fn weak_transmission(delta_c: f64, delta_a: f64, cooperativity: f64, coupling_ratio: f64) -> f64 {
    let point = OperatingPoint {
        y: 0.0,
        delta_c,
        delta_a,
        cooperativity,
    };
    (Complex64::new(1.0, 0.0) - 2.0 * coupling_ratio / point.response(0.0)).norm_sqr()
}

/// Transmission that falls back to the weak-drive form at `y = 0`.
pub fn transmission_or_weak(
    point: &OperatingPoint,
    coupling_ratio: f64,
    policy: BranchPolicy,
) -> Result<f64, SolveError> {
    if point.y == 0.0 {
        Ok(weak_transmission(
            point.delta_c,
            point.delta_a,
            point.cooperativity,
            coupling_ratio,
        ))
    } else {
        transmission(point, coupling_ratio, policy)
    }
}

/// `|y|² = (P_in / 2κ n_sat) (2κ_ex/κ) (λ_p / 2πħc)`.
pub fn drive_from_power(input_power: f64, cavity: &CavityParams, n_sat: f64) -> f64 {
    input_power / (2.0 * cavity.kappa() * n_sat) * (2.0 * cavity.coupling_ratio()) / cavity.photon_energy()
}

/// Inverse of [`drive_from_power`]: input power (W) for a given `|y|²`.
pub fn power_from_drive(y_squared: f64, cavity: &CavityParams, n_sat: f64) -> f64 {
    y_squared * (2.0 * cavity.kappa() * n_sat) * cavity.photon_energy() / (2.0 * cavity.coupling_ratio())
}
