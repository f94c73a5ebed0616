use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fiberqed_bench::{operating_points, weak_spectrum_data};
use fiberqed_core::fit::{self, FitSpec, ModelKind};
use fiberqed_core::spectrum::{self, linspace};
use fiberqed_core::steady_state::solve_intensity;
use fiberqed_core::{BranchPolicy, CavityParams, Drive, EnsembleParams, LockCondition};

fn cubic_roots(c: &mut Criterion) {
    let points = operating_points();
    c.bench_function("solve_intensity/36 points", |b| {
        b.iter(|| {
            for p in &points {
                black_box(solve_intensity(black_box(p)).unwrap());
            }
        })
    });
}

fn spectra(c: &mut Criterion) {
    let cavity = CavityParams::reference();
    let ensemble = EnsembleParams::reference();
    let grid = linspace(-20.0, 20.0, 801);
    let mut group = c.benchmark_group("spectrum/801 points");
    for (name, policy) in [
        ("lowest", BranchPolicy::Lowest),
        ("follow", BranchPolicy::FollowSweep(fiberqed_core::SweepDirection::Up)),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| {
                spectrum::spectrum(
                    &grid,
                    LockCondition::Aligned,
                    Drive::InputPower(750e-12),
                    &cavity,
                    &ensemble,
                    policy,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let data = weak_spectrum_data();
    let spec = FitSpec::new(ModelKind::AtomicSpectrum);
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    group.bench_function("weak spectrum, 8 starts", |b| {
        b.iter(|| fit::fit(&data, &spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, cubic_roots, spectra, fitting);
criterion_main!(benches);
