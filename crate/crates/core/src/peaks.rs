//! Peak detection on sampled curves with sub-sample refinement.

use serde::Serialize;

/// Minimum prominence, as a fraction of the curve's full scale, for a local
/// maximum to count as a peak.
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Grid index of the sampled maximum.
    pub index: usize,
    /// Refined abscissa of the extremum.
    pub position: f64,
    /// Refined value at the extremum.
    pub value: f64,
    pub prominence: f64,
}

/// Vertex of the parabola through three points. Falls back to the middle
/// point when the points are collinear.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let (x0, x2) = (x[0] - x[1], x[2] - x[1]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    // y = a t² + b t + c in t = x - x1.
    let denom = x0 * x2 * (x0 - x2);
    if denom == 0.0 {
        return (x[1], y1);
    }
    let a = (x2 * (y0 - y1) - x0 * (y2 - y1)) / denom;
    let b = (x0 * x0 * (y2 - y1) - x2 * x2 * (y0 - y1)) / denom;
    if a >= 0.0 {
        return (x[1], y1);
    }
    let t = (-b / (2.0 * a)).clamp(x0, x2);
    (x[1] + t, y1 + b * t + a * t * t)
}

/// Interior local maxima of `y(x)` with prominence at least
/// `min_prominence_frac` of `max(y) - min(y)`, ordered by position.
pub fn find_peaks(x: &[f64], y: &[f64], min_prominence_frac: f64) -> Vec<Peak> {
    assert_eq!(x.len(), y.len(), "abscissa and ordinate lengths differ");
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let threshold = min_prominence_frac * (hi - lo);
    if hi - lo <= 0.0 {
        return Vec::new();
    }

    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let mut left_min = y[i];
        for j in (0..i).rev() {
            if y[j] > y[i] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[i];
        for &v in &y[i + 1..] {
            if v > y[i] {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = y[i] - left_min.max(right_min);
        if prominence < threshold {
            continue;
        }
        let (position, value) = parabola_vertex([x[i - 1], x[i], x[i + 1]], [y[i - 1], y[i], y[i + 1]]);
        peaks.push(Peak {
            index: i,
            position,
            value,
            prominence,
        });
    }
    peaks
}

/// Interior local minima, reported with their (positive) depth prominence
/// and the refined minimum value.
pub fn find_dips(x: &[f64], y: &[f64], min_prominence_frac: f64) -> Vec<Peak> {
    let negated: Vec<f64> = y.iter().map(|v| -v).collect();
    find_peaks(x, &negated, min_prominence_frac)
        .into_iter()
        .map(|p| Peak { value: -p.value, ..p })
        .collect()
}

/// Separation between the outermost two of the features found, or `None`
/// with fewer than two.
pub fn feature_separation(features: &[Peak]) -> Option<f64> {
    match features {
        [first, .., last] => Some(last.position - first.position),
        _ => None,
    }
}
