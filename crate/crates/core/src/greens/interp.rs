//! One-dimensional interpolation on a strictly increasing grid.

/// Interpolation order for tabulated samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    /// Piecewise cubic Hermite with Fritsch-Carlson limited slopes (no
    /// overshoot between samples).
    #[default]
    MonotoneCubic,
}

/// Slopes for the shape-preserving cubic Hermite interpolant.
pub(crate) fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n >= 2);
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// Three-point end condition, limited to keep the end interval monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Evaluates the interpolant at `t` (which must lie in `[x[0], x[n-1]]`).
/// Samples are reproduced exactly at the nodes.
pub(crate) fn evaluate(x: &[f64], y: &[f64], slopes: Option<&[f64]>, t: f64) -> f64 {
    let upper = x.partition_point(|&v| v <= t);
    if upper > 0 && x[upper - 1] == t {
        return y[upper - 1];
    }
    let k = upper.clamp(1, x.len() - 1) - 1;
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    match slopes {
        None => y[k] + s * (y[k + 1] - y[k]),
        Some(d) => {
            let s2 = s * s;
            let s3 = s2 * s;
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1]
        }
    }
}
