//! Shared inputs for the benchmarks.

use fiberqed_core::fit::{gaussian_noise, Dataset, ModelKind};
use fiberqed_core::spectrum::linspace;
use fiberqed_core::OperatingPoint;

/// Operating points spread over the monostable and bistable regimes.
pub fn operating_points() -> Vec<OperatingPoint> {
    let mut out = Vec::new();
    for &y in &[0.1, 1.0, 3.0, 9.0] {
        for &c in &[0.5, 1.5, 10.0] {
            for &d in &[-5.0, 0.0, 2.5] {
                out.push(OperatingPoint::new(y, d, 0.5 * d, c).expect("valid point"));
            }
        }
    }
    out
}

/// Noisy weak-drive spectrum for the reference parameters.
pub fn weak_spectrum_data() -> Dataset {
    let x = linspace(-25.0, 25.0, 251);
    let clean = ModelKind::AtomicSpectrum
        .evaluate(&[1.5, 4.0, 1.7, 0.47, 12.7, 0.0, 852.0, 1.0, 0.0, 0.0], &x)
        .expect("model");
    Dataset::new(x, gaussian_noise(&clean, 0.01, 7), None).expect("dataset")
}
