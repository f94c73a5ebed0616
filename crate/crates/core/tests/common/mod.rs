//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use num_complex::Complex64;

/// `u·|1 + iΔc + 4C(1 − iΔa)/(1 + Δa² + 2u)|² − y²`, the steady-state
/// condition before it is multiplied out into a cubic.
pub fn intensity_condition(u: f64, y: f64, dc: f64, da: f64, c: f64) -> f64 {
    let d = 1.0 + da * da + 2.0 * u;
    let resp = Complex64::new(1.0, dc) + Complex64::new(4.0 * c, -4.0 * c * da) / d;
    u * resp.norm_sqr() - y * y
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the minimum of `|f|` on `[a, b]`.
fn min_abs(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c).abs() < f(d).abs() {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Roots of the steady-state condition on `[0, max(10, 10·y²)]`, found by a
/// sign-change scan on `samples` points plus bisection. Cells where `|F|`
/// has a local minimum are searched for a hidden pair of close roots.
pub fn brute_force_roots(y: f64, dc: f64, da: f64, c: f64, samples: usize) -> Vec<f64> {
    if y == 0.0 {
        return vec![0.0];
    }
    let f = |u: f64| intensity_condition(u, y, dc, da, c);
    let upper = (10.0 * y * y).max(10.0);
    let grid: Vec<f64> = (0..samples).map(|i| upper * i as f64 / (samples - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    let mut roots = Vec::new();
    for i in 0..samples - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
            roots.push(bisect(&f, grid[i], grid[i + 1]));
        } else if i + 2 < samples {
            // |F| dipping without a sign change may hide two roots in one cell.
            let c2 = vals[i + 2];
            let dip = (b - a).signum() != (c2 - b).signum();
            if dip && (a < 0.0) == (b < 0.0) && (b < 0.0) == (c2 < 0.0) {
                let m = min_abs(&f, grid[i], grid[i + 2]);
                let fm = f(m);
                if (fm < 0.0) != (b < 0.0) {
                    roots.push(bisect(&f, grid[i], m));
                    roots.push(bisect(&f, m, grid[i + 2]));
                }
            }
        }
    }
    if vals[samples - 1] == 0.0 {
        roots.push(grid[samples - 1]);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    roots
}

/// Weak-drive transmission written out directly.
pub fn weak_oracle(dc: f64, da: f64, c: f64, ratio: f64) -> f64 {
    let denom = Complex64::new(1.0, dc) + Complex64::new(4.0 * c, -4.0 * c * da) / (1.0 + da * da);
    (Complex64::new(1.0, 0.0) - 2.0 * ratio / denom).norm_sqr()
}

/// Uniform tuples `(y, C, Δc, Δa)` over y ∈ [0,3], C ∈ [0,5], Δ ∈ [−10,10].
pub fn random_tuples(n: usize, seed: u64) -> Vec<(f64, f64, f64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..=3.0),
                rng.random_range(0.0..=5.0),
                rng.random_range(-10.0..=10.0),
                rng.random_range(-10.0..=10.0),
            )
        })
        .collect()
}

/// Compares two sorted root lists at relative tolerance `tol`.
pub fn roots_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300))
}
