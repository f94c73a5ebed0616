use std::collections::BTreeMap;

use fiberqed_core::fit::{self, Dataset, FitError, FitSpec, ModelKind, Resolved};
use fiberqed_core::spectrum::{linspace, logspace};
use fiberqed_core::{CavityParams, RingModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn noisy(clean: &[f64], sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).unwrap();
    clean.iter().map(|v| v + normal.sample(&mut rng)).collect()
}

fn atomic_values(c: f64, gamma: f64, p_in: f64, n_sat: f64) -> Vec<f64> {
    vec![c, gamma, 1.7, 0.47, n_sat, p_in, 852.0, 1.0, 0.0, 0.0]
}

fn weak_spectrum(seed: Option<u64>) -> Dataset {
    let x = linspace(-25.0, 25.0, 251);
    let clean = ModelKind::AtomicSpectrum
        .evaluate(&atomic_values(1.5, 4.0, 0.0, 12.7), &x)
        .unwrap();
    let y = seed.map_or(clean.clone(), |s| noisy(&clean, 0.01, s));
    Dataset::new(x, y, None).unwrap()
}

fn saturation_data(seed: Option<u64>) -> Dataset {
    let x = logspace(1e-13, 1e-7, 49);
    let clean = ModelKind::SaturationCurve
        .evaluate(&[1.5, 1.7, 0.47, 12.7, 852.0, 1.0, 0.0], &x)
        .unwrap();
    let y = seed.map_or(clean.clone(), |s| noisy(&clean, 0.01, s));
    Dataset::new(x, y, None).unwrap()
}

#[test]
fn weak_spectrum_round_trip() {
    for seed in 0..5 {
        let data = weak_spectrum(Some(seed));
        let r = fit::fit(&data, &FitSpec::new(ModelKind::AtomicSpectrum).seed(seed)).unwrap();
        let c = r.get("cooperativity").unwrap();
        let g = r.get("gamma_perp_mhz").unwrap();
        assert!((c - 1.5).abs() < 0.1, "seed {seed}: C = {c}");
        assert!((g - 4.0).abs() < 0.3, "seed {seed}: gamma = {g}");
        assert!(r.uncertainties["cooperativity"].unwrap() < 0.1);
    }
}

#[test]
fn saturation_round_trip() {
    for seed in 0..5 {
        let data = saturation_data(Some(seed));
        let r = fit::fit(&data, &FitSpec::new(ModelKind::SaturationCurve).seed(seed)).unwrap();
        let n = r.get("n_sat").unwrap();
        assert!((n - 12.7).abs() < 1.0, "seed {seed}: n_sat = {n}");
    }
}

#[test]
fn zero_noise_from_truth_is_exact() {
    let data = weak_spectrum(None);
    let spec = FitSpec::new(ModelKind::AtomicSpectrum)
        .init("cooperativity", 1.5)
        .init("gamma_perp_mhz", 4.0);
    let r = fit::fit(&data, &spec).unwrap();
    assert!(r.converged);
    assert!(r.residual_rms < 1e-10, "{}", r.residual_rms);
}

#[test]
fn accepted_steps_decrease_objective_and_refit_is_stable() {
    let data = weak_spectrum(Some(11));
    let spec = FitSpec::new(ModelKind::AtomicSpectrum)
        .init("cooperativity", 0.8)
        .init("gamma_perp_mhz", 6.0);
    let r = fit::fit(&data, &spec).unwrap();
    assert!(r.trace.windows(2).all(|w| w[1] < w[0]));
    let again = FitSpec::new(ModelKind::AtomicSpectrum)
        .init("cooperativity", r.get("cooperativity").unwrap())
        .init("gamma_perp_mhz", r.get("gamma_perp_mhz").unwrap());
    let r2 = fit::fit(&data, &again).unwrap();
    for name in ["cooperativity", "gamma_perp_mhz"] {
        let d = (r2.get(name).unwrap() - r.get(name).unwrap()).abs();
        assert!(d < 1e-6, "{name} moved {d}");
    }
}

#[test]
fn reorder_and_sigma_scale_invariance() {
    let data = weak_spectrum(Some(3));
    let sigma = vec![0.01; data.len()];
    let with_sigma = Dataset::new(data.x().to_vec(), data.yobs().to_vec(), Some(sigma.clone())).unwrap();
    let scaled = Dataset::new(
        data.x().to_vec(),
        data.yobs().to_vec(),
        Some(sigma.iter().map(|s| s * 7.3).collect()),
    )
    .unwrap();
    let rev = Dataset::new(
        data.x().iter().rev().copied().collect(),
        data.yobs().iter().rev().copied().collect(),
        Some(sigma),
    )
    .unwrap();
    let spec = FitSpec::new(ModelKind::AtomicSpectrum);
    let a = fit::fit(&with_sigma, &spec).unwrap();
    for other in [&scaled, &rev] {
        let b = fit::fit(other, &spec).unwrap();
        for name in ["cooperativity", "gamma_perp_mhz"] {
            let d = (a.get(name).unwrap() - b.get(name).unwrap()).abs();
            assert!(d < 1e-9, "{name} differs by {d}");
        }
    }
}

#[test]
fn weak_data_leaves_n_sat_undetermined() {
    let x = linspace(-25.0, 25.0, 251);
    let clean = ModelKind::AtomicSpectrum
        .evaluate(&atomic_values(1.5, 4.0, 1e-14, 12.7), &x)
        .unwrap();
    let data = Dataset::new(x, noisy(&clean, 0.01, 5), None).unwrap();
    let spec = FitSpec::new(ModelKind::AtomicSpectrum)
        .free(&["cooperativity", "gamma_perp_mhz", "n_sat"])
        .fix("p_in_w", 1e-14);
    match fit::fit(&data, &spec) {
        Err(FitError::Degenerate { parameters, result }) => {
            assert!(parameters.contains(&"n_sat".to_string()), "{parameters:?}");
            assert!((result.get("cooperativity").unwrap() - 1.5).abs() < 0.2);
        }
        other => panic!("expected a degenerate fit, got {other:?}"),
    }
}

#[test]
fn empty_ring_fit_recovers_finesse() {
    let truth = RingModel::from_cavity(&CavityParams::reference(), 40e6).unwrap();
    let x = linspace(0.0, 450.0, 1801);
    let clean: Vec<f64> = x.iter().map(|nu| truth.transmission(nu * 1e6)).collect();
    let data = Dataset::new(x, noisy(&clean, 0.005, 1), None).unwrap();
    let r = fit::fit(&data, &FitSpec::new(ModelKind::EmptyRing).seed(4)).unwrap();
    assert!((r.derived["finesse"] - truth.finesse()).abs() < 1.0, "{:?}", r.derived);
    assert!((r.get("fsr_mhz").unwrap() - 148.0).abs() < 0.5);
    assert!(r.get("a_roundtrip").unwrap() <= r.get("t_coupler").unwrap());
}

#[test]
fn objective_is_permutation_invariant() {
    let data = weak_spectrum(Some(2));
    let spec = FitSpec::new(ModelKind::AtomicSpectrum);
    let mut params = BTreeMap::new();
    params.insert("cooperativity".to_string(), 1.2);
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.reverse();
    idx.swap(3, 100);
    let shuffled = Dataset::new(
        idx.iter().map(|&i| data.x()[i]).collect(),
        idx.iter().map(|&i| data.yobs()[i]).collect(),
        None,
    )
    .unwrap();
    let a = fit::objective(&data, &spec, &params).unwrap();
    let b = fit::objective(&shuffled, &spec, &params).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);

    let truth = ModelKind::AtomicSpectrum
        .evaluate(&atomic_values(1.5, 4.0, 0.0, 12.7), data.x())
        .unwrap();
    let exact = Dataset::new(data.x().to_vec(), truth, None).unwrap();
    params.insert("cooperativity".to_string(), 1.5);
    assert_eq!(fit::objective(&exact, &spec, &params).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_centered_difference(c in 0.5f64..3.0, g in 2.0f64..8.0) {
        let data = weak_spectrum(Some(9));
        let spec = FitSpec::new(ModelKind::AtomicSpectrum);
        let problem = Resolved::new(&data, &spec).unwrap();
        let at = [c, g];
        let grad = problem.objective_gradient(&at, 1e-6).unwrap();
        let oracle = |h: f64| -> Vec<f64> {
            (0..2).map(|i| {
                let mut p = at;
                let mut m = at;
                p[i] += h * at[i];
                m[i] -= h * at[i];
                (problem.objective(&p).unwrap() - problem.objective(&m).unwrap()) / (2.0 * h * at[i])
            }).collect()
        };
        let coarse = oracle(1e-3);
        let fine = oracle(5e-4);
        for i in 0..2 {
            // Step halving must move the oracle toward the analytic-style gradient.
            let e_coarse = (coarse[i] - grad[i]).abs();
            let e_fine = (fine[i] - grad[i]).abs();
            prop_assert!(e_fine <= e_coarse + 1e-9 * grad[i].abs().max(1e-12));
            prop_assert!((fine[i] / grad[i] - 1.0).abs() < 0.01, "ratio {}", fine[i] / grad[i]);
        }
    }
}
