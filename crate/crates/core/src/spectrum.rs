//! Probe-frequency sweeps of the steady-state transmission.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{CavityParams, Drive, EnsembleParams};
use crate::peaks::{self, Peak};
use crate::steady_state::{self, BranchPolicy, OperatingPoint, SolveError, SweepDirection};
use crate::units::mhz_to_angular;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("sweep grid must be strictly monotone and finite (problem at index {index})")]
    NonMonotoneGrid { index: usize },
    #[error("solver failed at grid index {index} ({detuning_mhz} MHz): {source}")]
    Solver {
        index: usize,
        detuning_mhz: f64,
        #[source]
        source: SolveError,
    },
}

/// Relation between the atomic and cavity detunings during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LockCondition {
    /// Cavity resonance aligned to the atomic line: `Δ_atom = Δ_cavity`.
    #[default]
    Aligned,
    /// Cavity resonance sits `cavity_offset_mhz` above the atomic line, so
    /// `Δ_cavity = Δ_atom - 2π·offset`.
    Independent { cavity_offset_mhz: f64 },
}

impl LockCondition {
    /// `(Δ_atom, Δ_cavity)` in rad/s for a probe detuning (MHz) from the atoms.
    pub fn detunings(&self, detuning_mhz: f64) -> (f64, f64) {
        let atom = mhz_to_angular(detuning_mhz);
        match *self {
            LockCondition::Aligned => (atom, atom),
            LockCondition::Independent { cavity_offset_mhz } => {
                (atom, mhz_to_angular(detuning_mhz - cavity_offset_mhz))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub detuning_mhz: f64,
    pub transmission: f64,
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// `n` logarithmically spaced points from `start` to `stop` inclusive.
pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    linspace(start.ln(), stop.ln(), n).into_iter().map(f64::exp).collect()
}

fn check_monotone(grid: &[f64]) -> Result<(), SpectrumError> {
    if let Some(index) = grid.iter().position(|v| !v.is_finite()) {
        return Err(SpectrumError::NonMonotoneGrid { index });
    }
    if grid.len() < 2 {
        return Ok(());
    }
    let increasing = grid[1] > grid[0];
    for (i, w) in grid.windows(2).enumerate() {
        let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
        if !ok {
            return Err(SpectrumError::NonMonotoneGrid { index: i + 1 });
        }
    }
    Ok(())
}

/// Normalized operating point for a probe detuning (MHz) from the atoms.
pub fn operating_point(
    detuning_mhz: f64,
    lock: LockCondition,
    y: f64,
    cavity: &CavityParams,
    ensemble: &EnsembleParams,
) -> Result<OperatingPoint, SolveError> {
    let (delta_atom, delta_cavity) = lock.detunings(detuning_mhz);
    OperatingPoint::new(
        y,
        delta_cavity / cavity.kappa(),
        delta_atom / ensemble.gamma_perp(),
        ensemble.cooperativity(),
    )
}

/// Transmission sampled over `grid_mhz` (probe detuning from the atoms).
///
/// With `FollowSweep` the grid is walked sequentially in the sweep direction,
/// each point taking the root nearest the previous one; otherwise the points
/// are independent. Zero drive uses the weak-drive form.
pub fn spectrum(
    grid_mhz: &[f64],
    lock: LockCondition,
    drive: Drive,
    cavity: &CavityParams,
    ensemble: &EnsembleParams,
    policy: BranchPolicy,
) -> Result<Vec<SpectrumPoint>, SpectrumError> {
    check_monotone(grid_mhz)?;
    let y = drive.amplitude(cavity, ensemble.n_sat());
    let ratio = cavity.coupling_ratio();
    let wrap = |index: usize| {
        move |source: SolveError| SpectrumError::Solver {
            index,
            detuning_mhz: grid_mhz[index],
            source,
        }
    };

    match policy {
        BranchPolicy::FollowSweep(direction) => {
            let ascending = grid_mhz.len() < 2 || grid_mhz[1] > grid_mhz[0];
            let forward = matches!(direction, SweepDirection::Up) == ascending;
            let order: Vec<usize> = if forward {
                (0..grid_mhz.len()).collect()
            } else {
                (0..grid_mhz.len()).rev().collect()
            };
            let mut out = vec![
                SpectrumPoint {
                    detuning_mhz: 0.0,
                    transmission: 0.0
                };
                grid_mhz.len()
            ];
            let mut previous = None;
            for i in order {
                let point = operating_point(grid_mhz[i], lock, y, cavity, ensemble).map_err(wrap(i))?;
                let transmission = if y == 0.0 {
                    steady_state::weak_transmission(point.delta_c, point.delta_a, point.cooperativity, ratio)
                } else {
                    let s = steady_state::solve(&point, ratio, policy, previous).map_err(wrap(i))?;
                    previous = Some(s.selected_u);
                    s.transmission
                };
                out[i] = SpectrumPoint {
                    detuning_mhz: grid_mhz[i],
                    transmission,
                };
            }
            Ok(out)
        }
        _ => grid_mhz
            .par_iter()
            .enumerate()
            .map(|(i, &nu)| {
                let point = operating_point(nu, lock, y, cavity, ensemble).map_err(wrap(i))?;
                let transmission = steady_state::transmission_or_weak(&point, ratio, policy).map_err(wrap(i))?;
                Ok(SpectrumPoint {
                    detuning_mhz: nu,
                    transmission,
                })
            })
            .collect(),
    }
}

/// Normal-mode features of a spectrum: the transmission dips, with the
/// default 1% prominence floor.
pub fn normal_modes(points: &[SpectrumPoint]) -> Vec<Peak> {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.detuning_mhz, p.transmission)).unzip();
    peaks::find_dips(&x, &y, peaks::DEFAULT_MIN_PROMINENCE)
}

/// Peak-to-peak separation (MHz) of the outermost normal-mode features.
pub fn measured_splitting_mhz(points: &[SpectrumPoint]) -> Option<f64> {
    peaks::feature_separation(&normal_modes(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::splitting_estimate;

    fn reference() -> (CavityParams, EnsembleParams) {
        (CavityParams::reference(), EnsembleParams::reference())
    }

    #[test]
    fn empty_cavity_dip_width() {
        let (cavity, ensemble) = reference();
        let empty = ensemble.with_cooperativity(0.0).unwrap();
        let grid = linspace(-10.0, 10.0, 4001);
        let s = spectrum(
            &grid,
            LockCondition::Aligned,
            Drive::Amplitude(0.0),
            &cavity,
            &empty,
            BranchPolicy::Lowest,
        )
        .unwrap();
        let t_min = s.iter().map(|p| p.transmission).fold(f64::INFINITY, f64::min);
        let half = 0.5 * (1.0 + t_min);
        let below: Vec<f64> = s
            .iter()
            .filter(|p| p.transmission <= half)
            .map(|p| p.detuning_mhz)
            .collect();
        let fwhm = below.last().unwrap() - below.first().unwrap();
        assert!((fwhm - 4.34).abs() < 0.01, "fwhm {fwhm}");
        assert_eq!(normal_modes(&s).len(), 1);
    }

    #[test]
    fn weak_drive_normal_mode_splitting() {
        let (cavity, ensemble) = reference();
        let grid = linspace(-20.0, 20.0, 2001);
        let s = spectrum(
            &grid,
            LockCondition::Aligned,
            Drive::Amplitude(0.0),
            &cavity,
            &ensemble,
            BranchPolicy::Lowest,
        )
        .unwrap();
        assert_eq!(normal_modes(&s).len(), 2);
        let split = measured_splitting_mhz(&s).unwrap();
        let estimate = splitting_estimate(1.5, cavity.kappa(), ensemble.gamma_perp()) / 1e6;
        assert!((split - 14.0).abs() < 0.5, "{split}");
        assert!((split - estimate).abs() / estimate < 0.35);
    }

    #[test]
    fn aligned_sweep_is_even() {
        let (cavity, ensemble) = reference();
        let grid = linspace(-15.0, 15.0, 301);
        let s = spectrum(
            &grid,
            LockCondition::Aligned,
            Drive::InputPower(60e-12),
            &cavity,
            &ensemble,
            BranchPolicy::Lowest,
        )
        .unwrap();
        for (a, b) in s.iter().zip(s.iter().rev()) {
            assert!((a.transmission - b.transmission).abs() < 1e-9);
        }
    }

    #[test]
    fn follow_sweep_matches_lowest_when_monostable() {
        let (cavity, ensemble) = reference();
        let grid = linspace(-15.0, 15.0, 121);
        let drive = Drive::InputPower(750e-12);
        let low = spectrum(
            &grid,
            LockCondition::Aligned,
            drive,
            &cavity,
            &ensemble,
            BranchPolicy::Lowest,
        )
        .unwrap();
        for dir in [SweepDirection::Up, SweepDirection::Down] {
            let f = spectrum(
                &grid,
                LockCondition::Aligned,
                drive,
                &cavity,
                &ensemble,
                BranchPolicy::FollowSweep(dir),
            )
            .unwrap();
            assert_eq!(low, f);
        }
    }

    #[test]
    fn follow_sweep_shows_hysteresis_when_bistable() {
        let cavity = CavityParams::reference();
        let ensemble = EnsembleParams::reference().with_cooperativity(20.0).unwrap();
        let drive = Drive::Amplitude(20.0);
        let grid = linspace(-80.0, 80.0, 1601);
        // Dispersive bistability needs the cavity detuned from the atoms.
        let lock = LockCondition::Independent {
            cavity_offset_mhz: 10.0,
        };
        let up = spectrum(
            &grid,
            lock,
            drive,
            &cavity,
            &ensemble,
            BranchPolicy::FollowSweep(SweepDirection::Up),
        )
        .unwrap();
        let down = spectrum(
            &grid,
            lock,
            drive,
            &cavity,
            &ensemble,
            BranchPolicy::FollowSweep(SweepDirection::Down),
        )
        .unwrap();
        let differ = up
            .iter()
            .zip(&down)
            .filter(|(a, b)| (a.transmission - b.transmission).abs() > 1e-3)
            .count();
        assert!(
            differ > 10,
            "expected a hysteresis window, got {differ} differing points"
        );
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let (cavity, ensemble) = reference();
        let err = spectrum(
            &[0.0, 1.0, 0.5],
            LockCondition::Aligned,
            Drive::Amplitude(0.1),
            &cavity,
            &ensemble,
            BranchPolicy::Lowest,
        )
        .unwrap_err();
        assert_eq!(err, SpectrumError::NonMonotoneGrid { index: 2 });
    }

    #[test]
    fn independent_lock_detunings() {
        let lock = LockCondition::Independent { cavity_offset_mhz: 2.0 };
        let (a, c) = lock.detunings(3.0);
        assert!((a - mhz_to_angular(3.0)).abs() < 1e-6);
        assert!((c - mhz_to_angular(1.0)).abs() < 1e-6);
    }

    #[test]
    fn grids() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let l = logspace(1e-12, 1e-8, 5);
        assert!((l[2] - 1e-10).abs() < 1e-22);
        assert_eq!(*l.last().unwrap(), 1e-8f64.ln().exp());
    }
}
