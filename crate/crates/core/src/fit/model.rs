//! Forward models available to the fitter, with their named parameters.

use serde::{Deserialize, Serialize};

use crate::params::{CavityParams, EnsembleParams};
use crate::peaks;
use crate::ring::RingModel;
use crate::steady_state::{self, BranchPolicy, OperatingPoint, SolveError};
use crate::units::mhz_to_angular;

use super::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Probe-detuning spectrum with the cavity aligned to the atoms;
    /// abscissa in MHz.
    AtomicSpectrum,
    /// Multi-FSR empty ring scan; abscissa in MHz.
    EmptyRing,
    /// On-resonance transmission against input power; abscissa in W.
    SaturationCurve,
}

/// Name, default, admissible interval and magnitude scale of a parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub lower: f64,
    pub upper: f64,
    /// Magnitude used for finite-difference steps and jitter when the value
    /// itself is near zero.
    pub typical: f64,
}

const fn info(name: &'static str, default: f64, lower: f64, upper: f64, typical: f64) -> ParamInfo {
    ParamInfo {
        name,
        default,
        lower,
        upper,
        typical,
    }
}

const ATOMIC: &[ParamInfo] = &[
    info("cooperativity", 1.5, 0.0, 50.0, 1.0),
    info("gamma_perp_mhz", 4.0, 0.01, 100.0, 1.0),
    info("kappa_i_mhz", 1.7, 1e-3, 100.0, 1.0),
    info("kappa_ex_mhz", 0.47, 1e-3, 100.0, 0.1),
    info("n_sat", 12.7, 1e-3, 1e7, 10.0),
    info("p_in_w", 0.0, 0.0, 1e-3, 1e-10),
    info("lambda_p_nm", 852.0, 100.0, 3000.0, 852.0),
    info("scale", 1.0, 0.1, 10.0, 1.0),
    info("baseline", 0.0, -1.0, 1.0, 0.1),
    info("center_mhz", 0.0, -1e3, 1e3, 1.0),
];

const SATURATION: &[ParamInfo] = &[
    info("cooperativity", 1.5, 0.0, 50.0, 1.0),
    info("kappa_i_mhz", 1.7, 1e-3, 100.0, 1.0),
    info("kappa_ex_mhz", 0.47, 1e-3, 100.0, 0.1),
    info("n_sat", 12.7, 1e-3, 1e7, 10.0),
    info("lambda_p_nm", 852.0, 100.0, 3000.0, 852.0),
    info("scale", 1.0, 0.1, 10.0, 1.0),
    info("baseline", 0.0, -1.0, 1.0, 0.1),
];

const RING: &[ParamInfo] = &[
    info("t_coupler", 0.980_244, 1e-3, 1.0 - 1e-12, 0.01),
    info("a_roundtrip", 0.930_371, 1e-3, 1.0, 0.01),
    info("fsr_mhz", 148.0, 1.0, 1e5, 10.0),
    info("nu0_mhz", 0.0, -1e6, 1e6, 1.0),
    info("scale", 1.0, 0.1, 10.0, 1.0),
];

impl ModelKind {
    /// Parameters in evaluation order.
    pub fn parameters(&self) -> &'static [ParamInfo] {
        match self {
            ModelKind::AtomicSpectrum => ATOMIC,
            ModelKind::SaturationCurve => SATURATION,
            ModelKind::EmptyRing => RING,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameters().iter().position(|p| p.name == name)
    }

    /// Free parameters used when a spec does not list any.
    pub fn default_free(&self) -> &'static [&'static str] {
        match self {
            ModelKind::AtomicSpectrum => &["cooperativity", "gamma_perp_mhz"],
            ModelKind::SaturationCurve => &["n_sat"],
            ModelKind::EmptyRing => &["t_coupler", "a_roundtrip", "fsr_mhz", "nu0_mhz"],
        }
    }

    /// Evaluates the model at every abscissa in `x`, given the full parameter
    /// vector in [`Self::parameters`] order.
    pub fn evaluate(&self, values: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
        match self {
            ModelKind::AtomicSpectrum => atomic(values, x),
            ModelKind::SaturationCurve => saturation(values, x),
            ModelKind::EmptyRing => ring(values, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("point {index}: {source}")]
    Solver {
        index: usize,
        #[source]
        source: SolveError,
    },
    #[error("invalid model parameters: {0}")]
    Parameters(String),
}

fn cavity_from(kappa_i_mhz: f64, kappa_ex_mhz: f64, lambda_nm: f64) -> Result<CavityParams, ModelError> {
    // The FSR does not enter the steady-state model; any positive value works.
    CavityParams::from_mhz(kappa_i_mhz, kappa_ex_mhz, 148.0, lambda_nm)
        .map_err(|e| ModelError::Parameters(e.to_string()))
}

fn atomic(v: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let [c, gamma_perp_mhz, ki, kex, n_sat, p_in, lambda, scale, baseline, center] = v else {
        return Err(ModelError::Parameters("wrong parameter count".into()));
    };
    let cavity = cavity_from(*ki, *kex, *lambda)?;
    let kappa = cavity.kappa();
    let gamma_perp = mhz_to_angular(*gamma_perp_mhz);
    let ratio = cavity.coupling_ratio();
    let y = steady_state::drive_from_power(*p_in, &cavity, *n_sat).sqrt();
    x.iter()
        .enumerate()
        .map(|(index, &nu)| {
            let delta = mhz_to_angular(nu - center);
            let point = OperatingPoint::new(y, delta / kappa, delta / gamma_perp, *c)
                .map_err(|source| ModelError::Solver { index, source })?;
            let t = steady_state::transmission_or_weak(&point, ratio, BranchPolicy::Lowest)
                .map_err(|source| ModelError::Solver { index, source })?;
            Ok(baseline + scale * t)
        })
        .collect()
}

fn saturation(v: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let [c, ki, kex, n_sat, lambda, scale, baseline] = v else {
        return Err(ModelError::Parameters("wrong parameter count".into()));
    };
    let cavity = cavity_from(*ki, *kex, *lambda)?;
    let ratio = cavity.coupling_ratio();
    x.iter()
        .enumerate()
        .map(|(index, &p)| {
            let y = steady_state::drive_from_power(p.max(0.0), &cavity, *n_sat).sqrt();
            let point = OperatingPoint::new(y, 0.0, 0.0, *c).map_err(|source| ModelError::Solver { index, source })?;
            let t = steady_state::transmission_or_weak(&point, ratio, BranchPolicy::Lowest)
                .map_err(|source| ModelError::Solver { index, source })?;
            Ok(baseline + scale * t)
        })
        .collect()
}

fn ring(v: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let [t, a, fsr, nu0, scale] = v else {
        return Err(ModelError::Parameters("wrong parameter count".into()));
    };
    let model = RingModel::new(*t, *a, fsr * 1e6, nu0 * 1e6).map_err(|e| ModelError::Parameters(e.to_string()))?;
    Ok(x.iter().map(|&nu| scale * model.transmission(nu * 1e6)).collect())
}

/// On-resonance saturation series point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub power_w: f64,
    pub t_atoms: f64,
    pub t_empty: f64,
}

/// Steady-state transmission at `Δa = Δc = 0` for each input power, with and
/// without atoms.
pub fn saturation_curve(
    powers: &[f64],
    cavity: &CavityParams,
    ensemble: &EnsembleParams,
) -> Result<Vec<SaturationPoint>, ModelError> {
    let ratio = cavity.coupling_ratio();
    powers
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            if !(p.is_finite() && p > 0.0) {
                return Err(ModelError::Parameters(format!(
                    "power at index {index} must be positive, got {p}"
                )));
            }
            let y = steady_state::drive_from_power(p, cavity, ensemble.n_sat()).sqrt();
            let eval = |c: f64| {
                OperatingPoint::new(y, 0.0, 0.0, c)
                    .and_then(|pt| steady_state::transmission(&pt, ratio, BranchPolicy::Lowest))
                    .map_err(|source| ModelError::Solver { index, source })
            };
            Ok(SaturationPoint {
                power_w: p,
                t_atoms: eval(ensemble.cooperativity())?,
                t_empty: eval(0.0)?,
            })
        })
        .collect()
}

fn moving_average(y: &[f64], half_window: usize) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half_window);
            let hi = (i + half_window + 1).min(y.len());
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Dips of a smoothed copy of the data, strongest first.
fn smoothed_dips(data: &Dataset, min_prominence: f64) -> (Vec<f64>, Vec<f64>, Vec<peaks::Peak>) {
    let sorted = data.sorted();
    let x = sorted.x().to_vec();
    let y = moving_average(sorted.yobs(), (x.len() / 200).max(1));
    let mut dips = peaks::find_dips(&x, &y, min_prominence);
    dips.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    (x, y, dips)
}

/// Half width at half depth on the outer flank of a dip, walking away from
/// `toward_center`.
fn outer_half_width(x: &[f64], y: &[f64], dip: &peaks::Peak, far_level: f64, outward: isize) -> Option<f64> {
    let half = 0.5 * (dip.value + far_level);
    let mut i = dip.index as isize;
    while i >= 0 && (i as usize) < x.len() {
        if y[i as usize] >= half {
            return Some((x[i as usize] - dip.position).abs());
        }
        i += outward;
    }
    None
}

/// Heuristic starting values for the free parameters, keyed by name. Entries
/// are only produced where the data supports an estimate.
pub fn suggest_initial(kind: ModelKind, data: &Dataset, fixed: &dyn Fn(&str) -> f64) -> Vec<(&'static str, f64)> {
    if data.len() < 5 {
        return Vec::new();
    }
    let mut out = Vec::new();
    match kind {
        ModelKind::AtomicSpectrum => {
            let (x, y, dips) = smoothed_dips(data, 0.05);
            let kappa_mhz = fixed("kappa_i_mhz") + fixed("kappa_ex_mhz");
            let far = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if let [a, b, ..] = dips.as_slice() {
                let (left, right) = if a.position < b.position { (a, b) } else { (b, a) };
                let split = right.position - left.position;
                let gamma = outer_half_width(&x, &y, right, far, 1)
                    .map(|hw| (2.0 * hw - kappa_mhz).max(0.2))
                    .unwrap_or_else(|| fixed("gamma_perp_mhz"));
                // Invert 4 sqrt(κγ⊥C) = splitting (the 2π factors cancel).
                let c = split * split / (16.0 * kappa_mhz * gamma);
                out.push(("gamma_perp_mhz", gamma));
                out.push(("cooperativity", c));
                out.push(("center_mhz", 0.5 * (left.position + right.position)));
            } else if let Some(d) = dips.first() {
                out.push(("center_mhz", d.position));
            }
        }
        ModelKind::SaturationCurve => {
            let sorted = data.sorted();
            let (x, y) = (sorted.x(), sorted.yobs());
            let (lo, hi) = (y[0], y[y.len() - 1]);
            let mid = 0.5 * (lo + hi);
            if let Some(i) = (1..y.len()).find(|&i| (y[i - 1] - mid) * (y[i] - mid) <= 0.0) {
                let p_half = x[i];
                if let Ok(cavity) = cavity_from(fixed("kappa_i_mhz"), fixed("kappa_ex_mhz"), fixed("lambda_p_nm")) {
                    let c = fixed("cooperativity");
                    // Half saturation when 1 + 2u ≈ 2, i.e. |y|² ≈ (1 + 2C)²/2.
                    let y_sq_unit = steady_state::drive_from_power(p_half, &cavity, 1.0);
                    out.push(("n_sat", y_sq_unit / (0.5 * (1.0 + 2.0 * c).powi(2))));
                }
            }
        }
        ModelKind::EmptyRing => {
            let (x, y, mut dips) = smoothed_dips(data, 0.2);
            if dips.len() >= 2 {
                dips.sort_by(|a, b| a.position.total_cmp(&b.position));
                let n = dips.len();
                let fsr = (dips[n - 1].position - dips[0].position) / (n - 1) as f64;
                let far = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let t0 = (dips.iter().map(|d| d.value).sum::<f64>() / n as f64 / far).clamp(0.0, 0.99);
                let hw = outer_half_width(&x, &y, &dips[0], far, 1);
                if let Some(hw) = hw.filter(|h| *h > 0.0) {
                    // Dip half width is measured to the half-depth point.
                    if let Ok(m) = RingModel::from_finesse(fsr / (2.0 * hw), fsr * 1e6, t0, 0.0) {
                        out.push(("t_coupler", m.t_coupler()));
                        out.push(("a_roundtrip", m.a_roundtrip()));
                    }
                }
                out.push(("fsr_mhz", fsr));
                out.push(("nu0_mhz", dips[0].position));
                out.push(("scale", far));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::logspace;

    fn defaults(kind: ModelKind) -> Vec<f64> {
        kind.parameters().iter().map(|p| p.default).collect()
    }

    #[test]
    fn defaults_lie_within_bounds() {
        for kind in [
            ModelKind::AtomicSpectrum,
            ModelKind::SaturationCurve,
            ModelKind::EmptyRing,
        ] {
            for p in kind.parameters() {
                assert!(p.lower <= p.default && p.default <= p.upper, "{}", p.name);
            }
            for name in kind.default_free() {
                assert!(kind.index_of(name).is_some());
            }
        }
    }

    #[test]
    fn saturation_limits() {
        let cavity = CavityParams::reference();
        let ensemble = EnsembleParams::reference();
        let curve = saturation_curve(&logspace(1e-15, 1e-5, 41), &cavity, &ensemble).unwrap();
        assert!((curve[0].t_atoms - 0.880).abs() < 1e-3);
        assert!((curve.last().unwrap().t_atoms - 0.321).abs() < 1e-3);
        for w in curve.windows(2) {
            assert!(w[1].t_atoms < w[0].t_atoms);
        }
        let empty = ensemble.with_cooperativity(0.0).unwrap();
        let flat = saturation_curve(&logspace(1e-12, 1e-8, 9), &cavity, &empty).unwrap();
        for p in &flat {
            assert!((p.t_atoms - flat[0].t_atoms).abs() < 1e-12);
            assert!((p.t_atoms - p.t_empty).abs() < 1e-12);
        }
        assert!(saturation_curve(&[0.0], &cavity, &ensemble).is_err());
    }

    #[test]
    fn evaluate_matches_direct_models() {
        let x = [-5.0, 0.0, 3.0];
        let atomic = ModelKind::AtomicSpectrum
            .evaluate(&defaults(ModelKind::AtomicSpectrum), &x)
            .unwrap();
        let r = 0.47 / 2.17;
        let want = steady_state::weak_transmission(0.0, 0.0, 1.5, r);
        assert!((atomic[1] - want).abs() < 1e-12);

        let ring = ModelKind::EmptyRing
            .evaluate(&defaults(ModelKind::EmptyRing), &[0.0])
            .unwrap();
        let m = RingModel::from_cavity(&CavityParams::reference(), 0.0).unwrap();
        assert!((ring[0] - m.transmission(0.0)).abs() < 1e-5);
    }

    #[test]
    fn ring_heuristic_recovers_comb() {
        let m = RingModel::from_cavity(&CavityParams::reference(), 37e6).unwrap();
        let x: Vec<f64> = (0..2251).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|nu| m.transmission(nu * 1e6)).collect();
        let data = Dataset::new(x, y, None).unwrap();
        let guess = suggest_initial(ModelKind::EmptyRing, &data, &|_| f64::NAN);
        let get = |n: &str| guess.iter().find(|(k, _)| *k == n).unwrap().1;
        assert!((get("fsr_mhz") - 148.0).abs() < 0.5);
        assert!((get("nu0_mhz") - 37.0).abs() < 0.5);
        assert!((get("t_coupler") - m.t_coupler()).abs() < 0.01);
    }
}
