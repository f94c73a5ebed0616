//! Real roots of a cubic polynomial: closed form followed by a guarded Newton
//! polish.

use std::f64::consts::TAU;

/// Evaluates `c[0] x³ + c[1] x² + c[2] x + c[3]`.
#[inline]
pub fn eval(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

#[inline]
fn eval_derivative(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// Magnitude scale of the polynomial terms at `x`, used to express residuals
/// relative to the size of the cancelling terms.
#[inline]
pub fn term_scale(c: &[f64; 4], x: f64) -> f64 {
    let ax = x.abs();
    c[0].abs() * ax * ax * ax + c[1].abs() * ax * ax + c[2].abs() * ax + c[3].abs()
}

/// `|p(x)| / term_scale(x)`.
pub fn relative_residual(c: &[f64; 4], x: f64) -> f64 {
    let scale = term_scale(c, x);
    if scale == 0.0 {
        0.0
    } else {
        eval(c, x).abs() / scale
    }
}

fn newton_polish(c: &[f64; 4], mut x: f64) -> f64 {
    let mut fx = eval(c, x);
    for _ in 0..32 {
        let d = eval_derivative(c, x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - fx / d;
        let f_next = eval(c, next);
        // Near a double root the derivative vanishes; only keep improving steps.
        if !(f_next.abs() < fx.abs()) {
            break;
        }
        let converged = (next - x).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        x = next;
        fx = f_next;
        if converged {
            break;
        }
    }
    x
}

/// All real roots of a cubic with `c[0] != 0`, sorted ascending, duplicates
/// (within `1e-10` relative) merged.
pub fn real_roots(c: &[f64; 4]) -> Vec<f64> {
    debug_assert!(c[0] != 0.0);
    let b = c[1] / c[0];
    let cc = c[2] / c[0];
    let d = c[3] / c[0];

    // Depressed cubic t³ + p t + q with x = t - b/3.
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots: Vec<f64> = if disc > 0.0 {
        let s = disc.sqrt();
        let a = -q.signum() * (0.5 * q.abs() + s).cbrt();
        let t = if a != 0.0 { a - p / (3.0 * a) } else { 0.0 };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - TAU * k as f64 / 3.0).cos() - shift)
            .collect()
    };

    for r in roots.iter_mut() {
        *r = newton_polish(c, *r);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
    roots
}
