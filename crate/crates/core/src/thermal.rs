//! Single-pole thermal model of the heated fiber cavity and the side-of-fringe
//! integral lock.
//!
//! Circulating heater power warms the fiber and pulls every cavity resonance
//! to lower frequency. The offset relaxes toward its steady-state value with
//! one time constant:
//!
//! ```text
//! δ' = δ + dt/τ · (S·α·P_circ − δ)
//! ```
//!
//! All frequencies here are ordinary frequencies in Hz measured from the cold
//! cavity resonance. The default constants are demonstration values, not
//! measured properties of any fiber.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::CavityParams;
use crate::steady_state::SweepDirection;

/// Heater detuning at the lock operating point, in cold linewidths above the
/// shifted resonance. One linewidth puts the heater on the thermally stable
/// side with 20% of the resonant buildup.
pub const LOCK_HEATER_DETUNING: f64 = 1.0;

/// Consecutive steps with the probe past the fringe center before the lock is
/// declared lost.
pub const CAPTURE_STEPS: usize = 100;

/// Band (fraction of a linewidth) that counts as locked for the re-lock time.
pub const RELOCK_BAND: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("invalid thermal configuration: {0}")]
    InvalidConfig(String),
    #[error("step too coarse: {what} is {value:.3e}, limit {limit:.3e}")]
    StepTooCoarse { what: &'static str, value: f64, limit: f64 },
    #[error("lock lost at t = {time_s:.6} s: probe outside capture range for {steps} steps")]
    LockLost { time_s: f64, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Relaxation time (s).
    pub tau_th: f64,
    /// Steady-state resonance shift per absorbed watt (Hz/W), negative.
    pub shift_per_watt: f64,
    pub absorption_fraction: f64,
}

impl ThermalParams {
    pub fn new(tau_th: f64, shift_per_watt: f64, absorption_fraction: f64) -> Result<Self, ThermalError> {
        let p = Self {
            tau_th,
            shift_per_watt,
            absorption_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        if !(self.tau_th.is_finite() && self.tau_th > 0.0) {
            return Err(ThermalError::InvalidConfig(format!(
                "tau_th must be positive, got {}",
                self.tau_th
            )));
        }
        if !(self.shift_per_watt.is_finite() && self.shift_per_watt < 0.0) {
            return Err(ThermalError::InvalidConfig(format!(
                "shift_per_watt must be negative (heating red-shifts), got {}",
                self.shift_per_watt
            )));
        }
        if !(0.0..=1.0).contains(&self.absorption_fraction) {
            return Err(ThermalError::InvalidConfig(format!(
                "absorption_fraction must lie in [0, 1], got {}",
                self.absorption_fraction
            )));
        }
        Ok(())
    }

    /// Demonstration values: τ = 10 ms, 1% absorption, and a shift per watt
    /// chosen so that full resonant buildup of `heater_power` pulls the
    /// resonance by 20 cold linewidths.
    pub fn demo(cavity: &CavityParams, heater_power: f64) -> Self {
        let absorption_fraction = 0.01;
        let full_pull = -20.0 * cavity.fwhm();
        Self {
            tau_th: 10e-3,
            shift_per_watt: full_pull / (absorption_fraction * heater_power * buildup_factor(cavity)),
            absorption_fraction,
        }
    }

    pub fn with_absorption(self, absorption_fraction: f64) -> Self {
        Self {
            absorption_fraction,
            ..self
        }
    }

    /// Resonant steady-state shift `S·α·P_h·B` (Hz) for a heater power.
    pub fn full_pull(&self, heater_power: f64, cavity: &CavityParams) -> f64 {
        self.shift_per_watt * self.absorption_fraction * heater_power * buildup_factor(cavity)
    }
}

/// Resonant power buildup `2κ_ex·FSR/κ²`.
pub fn buildup_factor(cavity: &CavityParams) -> f64 {
    2.0 * cavity.kappa_ex() * cavity.fsr() / cavity.kappa().powi(2)
}

fn lorentzian(detuning: f64, fwhm: f64) -> f64 {
    let z = 2.0 * detuning / fwhm;
    1.0 / (1.0 + z * z)
}

/// Circulating power (W) for a heater `heater_detuning` Hz from the shifted
/// resonance.
pub fn circulating_power(heater_detuning: f64, heater_power: f64, cavity: &CavityParams) -> f64 {
    heater_power * buildup_factor(cavity) * lorentzian(heater_detuning, cavity.fwhm())
}

/// Empty-cavity through-port transmission of a weak laser `detuning` Hz from
/// the shifted resonance.
pub fn probe_transmission(detuning: f64, cavity: &CavityParams) -> f64 {
    let on_resonance = ((cavity.kappa_i() - cavity.kappa_ex()) / cavity.kappa()).powi(2);
    1.0 - (1.0 - on_resonance) * lorentzian(detuning, cavity.fwhm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockConfig {
    /// Target probe transmission.
    pub setpoint: f64,
    /// Heater frequency change (Hz) per unit transmission error per step.
    pub gain_i: f64,
    /// Probe power (W). Its heating is neglected.
    pub probe_power: f64,
    pub heater_power: f64,
    pub dt: f64,
}

impl LockConfig {
    /// 2 mW heater, 140 nW probe, `dt = τ/100`, setpoint at the half-depth
    /// point of the probe fringe, and a critically damped integral gain.
    pub fn demo(cavity: &CavityParams, params: &ThermalParams) -> Self {
        let heater_power = 2e-3;
        let dt = params.tau_th / 100.0;
        let fwhm = cavity.fwhm();
        let depth = 1.0 - probe_transmission(0.0, cavity);
        let mut cfg = Self {
            setpoint: 1.0 - depth / 2.0,
            gain_i: 0.0,
            probe_power: 140e-9,
            heater_power,
            dt,
        };
        // Linearized loop: τs² + (1 + k)s + kG = 0 with k the thermal
        // stiffness at the operating point and G = gain·(depth/W)/dt.
        let k = thermal_stiffness(params, &cfg, cavity);
        let critical = (1.0 + k).powi(2) / (4.0 * params.tau_th * k);
        cfg.gain_i = critical * dt * fwhm / depth;
        cfg
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self {
            gain_i: self.gain_i * dt / self.dt,
            dt,
            ..self
        }
    }

    fn validate(&self, params: &ThermalParams) -> Result<(), ThermalError> {
        params.validate()?;
        let limit = params.tau_th / 10.0;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ThermalError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.dt >= limit {
            return Err(ThermalError::StepTooCoarse {
                what: "dt",
                value: self.dt,
                limit,
            });
        }
        if !self.gain_i.is_finite() || !self.setpoint.is_finite() {
            return Err(ThermalError::InvalidConfig("gain and setpoint must be finite".into()));
        }
        if !(self.heater_power >= 0.0) || !(self.probe_power >= 0.0) {
            return Err(ThermalError::InvalidConfig("powers must be non-negative".into()));
        }
        Ok(())
    }
}

/// `d(S·α·P_circ)/dx` at the lock operating point, made dimensionless.
fn thermal_stiffness(params: &ThermalParams, config: &LockConfig, cavity: &CavityParams) -> f64 {
    let w = cavity.fwhm();
    let x = LOCK_HEATER_DETUNING * w;
    let z = 2.0 * x / w;
    let slope = -(8.0 * x / (w * w)) / (1.0 + z * z).powi(2);
    params.full_pull(config.heater_power, cavity) * slope
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThermalState {
    /// Thermal shift of the resonance (Hz), ≤ 0.
    pub resonance_offset: f64,
    /// Heater laser frequency relative to the cold resonance (Hz).
    pub heater_frequency: f64,
    /// Accumulated controller correction to the heater frequency (Hz).
    pub controller_integral: f64,
}

impl ThermalState {
    /// Heater detuning from the resonance shifted by both heating and an
    /// external `disturbance` (Hz).
    pub fn heater_detuning(&self, disturbance: f64) -> f64 {
        self.heater_frequency - (self.resonance_offset + disturbance)
    }
}

/// One explicit Euler step of the thermal relaxation.
pub fn step(
    state: &ThermalState,
    params: &ThermalParams,
    config: &LockConfig,
    cavity: &CavityParams,
    disturbance: f64,
) -> ThermalState {
    let p_circ = circulating_power(state.heater_detuning(disturbance), config.heater_power, cavity);
    let target = params.shift_per_watt * params.absorption_fraction * p_circ;
    ThermalState {
        resonance_offset: state.resonance_offset + config.dt / params.tau_th * (target - state.resonance_offset),
        ..*state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSample {
    pub time_s: f64,
    pub heater_detuning_hz: f64,
    /// Resonance position relative to the cold cavity, thermal shift plus any
    /// external disturbance.
    pub resonance_offset_hz: f64,
    pub p_circ_w: f64,
    /// In a scan, the through-port transmission of the swept heater; in a
    /// lock run, the probe transmission used as error signal.
    pub probe_transmission: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub direction: SweepDirection,
    /// Hz/s, positive.
    pub rate: f64,
    /// Hz.
    pub span: f64,
    /// Scan center relative to the cold resonance (Hz).
    pub center: f64,
}

impl ScanConfig {
    /// One linewidth per 10 τ over 40 linewidths, centered 8 linewidths below
    /// the cold resonance so that the fully pulled resonance is released
    /// before the end of a down-scan.
    pub fn demo(direction: SweepDirection, cavity: &CavityParams, params: &ThermalParams) -> Self {
        let w = cavity.fwhm();
        Self {
            direction,
            rate: w / (10.0 * params.tau_th),
            span: 40.0 * w,
            center: -8.0 * w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTrace {
    pub direction: SweepDirection,
    pub samples: Vec<ThermalSample>,
    /// Time spent with the circulating power above half the resonant buildup.
    pub dwell_time_s: f64,
}

/// Sweeps the heater laser across the resonance at constant rate.
///
/// Up- and down-scans visit exactly the same frequencies in reverse order.
pub fn scan_experiment(
    scan: &ScanConfig,
    params: &ThermalParams,
    config: &LockConfig,
    cavity: &CavityParams,
) -> Result<ScanTrace, ThermalError> {
    config.validate(params)?;
    let w = cavity.fwhm();
    if !(scan.span >= 3.0 * w) {
        return Err(ThermalError::InvalidConfig(format!(
            "scan span {:.3e} Hz must cover at least 3 linewidths ({:.3e} Hz)",
            scan.span,
            3.0 * w
        )));
    }
    if !(scan.rate > 0.0 && scan.rate.is_finite() && scan.center.is_finite()) {
        return Err(ThermalError::InvalidConfig(
            "scan rate must be positive and center finite".into(),
        ));
    }
    if scan.rate * config.dt > w / 10.0 {
        return Err(ThermalError::StepTooCoarse {
            what: "frequency step",
            value: scan.rate * config.dt,
            limit: w / 10.0,
        });
    }

    let lo = scan.center - scan.span / 2.0;
    let hi = scan.center + scan.span / 2.0;
    let n = (scan.span / (scan.rate * config.dt)).round() as usize + 1;
    let mut grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    if scan.direction == SweepDirection::Down {
        grid.reverse();
    }

    let half_buildup = 0.5 * config.heater_power * buildup_factor(cavity);
    let mut state = ThermalState::default();
    let mut samples = Vec::with_capacity(n);
    let mut dwell_steps = 0usize;
    for (k, &nu) in grid.iter().enumerate() {
        state.heater_frequency = nu;
        let x = state.heater_detuning(0.0);
        let p_circ = circulating_power(x, config.heater_power, cavity);
        if p_circ >= half_buildup {
            dwell_steps += 1;
        }
        samples.push(ThermalSample {
            time_s: k as f64 * config.dt,
            heater_detuning_hz: x,
            resonance_offset_hz: state.resonance_offset,
            p_circ_w: p_circ,
            probe_transmission: probe_transmission(x, cavity),
        });
        state = step(&state, params, config, cavity, 0.0);
    }
    Ok(ScanTrace {
        direction: scan.direction,
        samples,
        dwell_time_s: dwell_steps as f64 * config.dt,
    })
}

/// Fixed operating point of the lock: thermal equilibrium with the heater
/// [`LOCK_HEATER_DETUNING`] linewidths above the resonance and the probe half
/// a linewidth above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockPoint {
    pub state: ThermalState,
    /// Resonance position the loop holds (Hz from the cold resonance).
    pub reference: f64,
    pub probe_frequency: f64,
}

impl LockPoint {
    pub fn equilibrium(params: &ThermalParams, config: &LockConfig, cavity: &CavityParams) -> Self {
        let w = cavity.fwhm();
        let x0 = LOCK_HEATER_DETUNING * w;
        let offset = params.full_pull(config.heater_power, cavity) * lorentzian(x0, w);
        Self {
            state: ThermalState {
                resonance_offset: offset,
                heater_frequency: offset + x0,
                controller_integral: 0.0,
            },
            reference: offset,
            probe_frequency: offset + w / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockMetrics {
    /// RMS of the resonance error over the run (Hz).
    pub rms_error_hz: f64,
    pub max_abs_error_hz: f64,
    pub final_error_hz: f64,
    /// Time after which the error stays inside the locked band for the rest
    /// of the run. `None` if it never settles.
    pub relock_time_s: Option<f64>,
    /// Largest excursion on the side opposite to the first significant error.
    pub overshoot_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockRun {
    pub samples: Vec<ThermalSample>,
    pub metrics: LockMetrics,
    pub lock_point: LockPoint,
}

/// Integral side-of-fringe lock.
///
/// Each step reads the probe transmission `T_p` and moves the heater by
/// `gain_i·(T_p − setpoint)`. A resonance drifting up brings the probe toward
/// the fringe center, lowering `T_p`, so a positive gain pulls the heater
/// closer to the resonance and the extra heating pushes the resonance back.
pub fn lock_loop(
    duration: f64,
    disturbance: &dyn Fn(f64) -> f64,
    params: &ThermalParams,
    config: &LockConfig,
    cavity: &CavityParams,
) -> Result<LockRun, ThermalError> {
    config.validate(params)?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(ThermalError::InvalidConfig(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let w = cavity.fwhm();
    let point = LockPoint::equilibrium(params, config, cavity);
    let base_frequency = point.state.heater_frequency;
    let mut state = point.state;
    let steps = (duration / config.dt).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut errors = Vec::with_capacity(steps + 1);
    let mut outside = 0usize;

    for k in 0..=steps {
        let t = k as f64 * config.dt;
        let d = disturbance(t);
        let resonance = state.resonance_offset + d;
        let probe_detuning = point.probe_frequency - resonance;
        let t_probe = probe_transmission(probe_detuning, cavity);
        let x = state.heater_detuning(d);
        samples.push(ThermalSample {
            time_s: t,
            heater_detuning_hz: x,
            resonance_offset_hz: resonance,
            p_circ_w: circulating_power(x, config.heater_power, cavity),
            probe_transmission: t_probe,
        });
        errors.push(resonance - point.reference);

        if probe_detuning <= 0.0 {
            outside += 1;
            if outside > CAPTURE_STEPS {
                return Err(ThermalError::LockLost {
                    time_s: t,
                    steps: outside,
                });
            }
        } else {
            outside = 0;
        }
        if k == steps {
            break;
        }

        let next = step(&state, params, config, cavity, d);
        state.resonance_offset = next.resonance_offset;
        state.controller_integral += config.gain_i * (t_probe - config.setpoint);
        state.heater_frequency = base_frequency + state.controller_integral;
    }

    Ok(LockRun {
        metrics: metrics(&errors, config.dt, RELOCK_BAND * w),
        samples,
        lock_point: point,
    })
}

fn metrics(errors: &[f64], dt: f64, band: f64) -> LockMetrics {
    let n = errors.len().max(1) as f64;
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let relock_time_s = match errors.iter().rposition(|e| e.abs() >= band) {
        None => Some(0.0),
        Some(i) if i + 1 < errors.len() => Some((i + 1) as f64 * dt),
        Some(_) => None,
    };
    let first_sign = errors.iter().find(|e| e.abs() >= band).map_or(0.0, |e| e.signum());
    let overshoot = errors.iter().map(|e| -first_sign * e).fold(0.0f64, f64::max);
    LockMetrics {
        rms_error_hz: rms,
        max_abs_error_hz: max_abs,
        final_error_hz: errors.last().copied().unwrap_or(0.0),
        relock_time_s,
        overshoot_hz: if first_sign == 0.0 { 0.0 } else { overshoot },
    }
}

/// Eigenvalues of the one-step map of `(resonance offset, heater frequency)`
/// linearized at the lock point, from central differences.
pub fn linearized_eigenvalues(params: &ThermalParams, config: &LockConfig, cavity: &CavityParams) -> [Complex64; 2] {
    let point = LockPoint::equilibrium(params, config, cavity);
    let map = |offset: f64, heater: f64| -> (f64, f64) {
        let s = ThermalState {
            resonance_offset: offset,
            heater_frequency: heater,
            controller_integral: 0.0,
        };
        let next = step(&s, params, config, cavity, 0.0);
        let t_probe = probe_transmission(point.probe_frequency - offset, cavity);
        (
            next.resonance_offset,
            heater + config.gain_i * (t_probe - config.setpoint),
        )
    };
    let h = 1e-4 * cavity.fwhm();
    let (o, f) = (point.state.resonance_offset, point.state.heater_frequency);
    let d_offset = (map(o + h, f), map(o - h, f));
    let d_heater = (map(o, f + h), map(o, f - h));
    let j11 = (d_offset.0 .0 - d_offset.1 .0) / (2.0 * h);
    let j21 = (d_offset.0 .1 - d_offset.1 .1) / (2.0 * h);
    let j12 = (d_heater.0 .0 - d_heater.1 .0) / (2.0 * h);
    let j22 = (d_heater.0 .1 - d_heater.1 .1) / (2.0 * h);
    let tr = j11 + j22;
    let det = j11 * j22 - j12 * j21;
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}
