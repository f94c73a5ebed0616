mod common;

use fiberqed_core::spectrum::{self, linspace};
use fiberqed_core::steady_state::{
    self, cubic, drive_from_power, power_from_drive, solve_intensity, transmission, weak_transmission,
};
use fiberqed_core::{BranchPolicy, CavityParams, Drive, EnsembleParams, LockCondition, OperatingPoint};
use proptest::prelude::*;

const RATIO: f64 = 0.47 / 2.17;

#[test]
fn roots_agree_with_sign_change_scan() {
    for (y, c, dc, da) in common::random_tuples(2000, 17) {
        let point = OperatingPoint::new(y, dc, da, c).unwrap();
        let roots = solve_intensity(&point).unwrap();
        let oracle = common::brute_force_roots(y, dc, da, c, 20_000);
        assert!(
            common::roots_match(&roots, &oracle, 1e-7),
            "y={y} C={c} dc={dc} da={da}: {roots:?} vs {oracle:?}"
        );
        for &u in &roots {
            assert!(cubic::relative_residual(&point.cubic(), u) < 1e-9);
        }
    }
}

#[test]
fn bistable_point_has_three_roots() {
    let point = OperatingPoint::new(9.0, 0.0, 0.0, 10.0).unwrap();
    let roots = solve_intensity(&point).unwrap();
    let oracle = common::brute_force_roots(9.0, 0.0, 0.0, 10.0, 100_000);
    assert_eq!(roots.len(), 3);
    assert!(common::roots_match(&roots, &oracle, 1e-7));
}

#[test]
fn saturation_approaches_empty_cavity_monotonically() {
    let mut last = f64::INFINITY;
    let empty = weak_transmission(0.0, 0.0, 0.0, RATIO);
    for k in 0..60 {
        let y = 10f64.powf(-3.0 + k as f64 * 0.1);
        let t = transmission(
            &OperatingPoint::new(y, 0.0, 0.0, 1.5).unwrap(),
            RATIO,
            BranchPolicy::Lowest,
        )
        .unwrap();
        assert!(t <= last + 1e-12);
        last = t;
    }
    assert!((last - empty).abs() < 1e-4);
}

#[test]
fn aligned_spectrum_is_even() {
    let cavity = CavityParams::reference();
    let ensemble = EnsembleParams::reference();
    let grid = linspace(-30.0, 30.0, 601);
    for p in [0.0, 30e-12, 750e-12, 2.3e-9] {
        let s = spectrum::spectrum(
            &grid,
            LockCondition::Aligned,
            Drive::InputPower(p),
            &cavity,
            &ensemble,
            BranchPolicy::Lowest,
        )
        .unwrap();
        for (a, b) in s.iter().zip(s.iter().rev()) {
            assert!((a.transmission - b.transmission).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weak_drive_matches_linear_form(c in 0.0f64..5.0, dc in -10.0f64..10.0, da in -10.0f64..10.0, y in 0.0f64..1e-3) {
        let t = transmission(&OperatingPoint::new(y, dc, da, c).unwrap(), RATIO, BranchPolicy::Lowest).unwrap();
        prop_assert!((t - common::weak_oracle(dc, da, c, RATIO)).abs() < 1e-5);
        prop_assert!((weak_transmission(dc, da, c, RATIO) - common::weak_oracle(dc, da, c, RATIO)).abs() < 1e-12);
    }

    #[test]
    fn transmission_is_bounded(c in 0.0f64..5.0, dc in -10.0f64..10.0, da in -10.0f64..10.0, y in 0.0f64..30.0,
                               ratio in 0.0f64..=0.5) {
        let point = OperatingPoint::new(y, dc, da, c).unwrap();
        for policy in [BranchPolicy::Lowest, BranchPolicy::Highest] {
            let t = steady_state::transmission_or_weak(&point, ratio, policy).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&t), "T = {}", t);
        }
    }

    #[test]
    fn every_root_satisfies_the_field_equation(c in 0.0f64..5.0, dc in -10.0f64..10.0, da in -10.0f64..10.0, y in 0.01f64..3.0) {
        let point = OperatingPoint::new(y, dc, da, c).unwrap();
        for u in solve_intensity(&point).unwrap() {
            let x = steady_state::field_from_root(&point, u);
            prop_assert!(point.field_residual(x) < 1e-9);
            prop_assert!((x.norm_sqr() - u).abs() <= 1e-9 * u.max(1e-12));
        }
    }

    #[test]
    fn strong_drive_reaches_empty_cavity(c in 0.0f64..5.0, dc in -10.0f64..10.0, da in -10.0f64..10.0) {
        let strong = transmission(&OperatingPoint::new(1e5, dc, da, c).unwrap(), RATIO, BranchPolicy::Lowest).unwrap();
        prop_assert!((strong - common::weak_oracle(dc, da, 0.0, RATIO)).abs() < 1e-4);
    }

    #[test]
    fn power_drive_round_trip(p in 1e-15f64..1e-6) {
        let cavity = CavityParams::reference();
        let y2 = drive_from_power(p, &cavity, 12.7);
        prop_assert!((power_from_drive(y2, &cavity, 12.7) - p).abs() <= 1e-12 * p);
        prop_assert!((drive_from_power(2.0 * p, &cavity, 12.7) - 2.0 * y2).abs() <= 1e-12 * y2);
    }
}
