//! One-dimensional earth mover's distance over equal-width histograms.

use crate::error::{Error, Result};

/// Normalized histogram of `values` over `bins` equal-width bins spanning `[lo, hi]`.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    if values.is_empty() || bins == 0 {
        return h;
    }
    let width = hi - lo;
    for &x in values {
        let idx = if width > 0.0 {
            (((x - lo) / width) * bins as f64).floor() as isize
        } else {
            0
        };
        h[idx.clamp(0, bins as isize - 1) as usize] += 1.0;
    }
    let n = values.len() as f64;
    h.iter_mut().for_each(|c| *c /= n);
    h
}

/// EMD between two unit-mass histograms, with ground distance |i - j| in bins.
pub fn emd_1d(h1: &[f64], h2: &[f64]) -> f64 {
    assert_eq!(h1.len(), h2.len(), "histograms differ in length");
    let mut carried = 0.0;
    let mut work = 0.0;
    for (a, b) in h1.iter().zip(h2) {
        carried += a - b;
        work += carried.abs();
    }
    work
}

/// Histograms both samples over their combined range and returns the EMD in
/// bin units, or divided by `bins - 1` when `normalize` is set.
pub fn sample_emd(a: &[f64], b: &[f64], bins: usize, normalize: bool) -> Result<f64> {
    if bins < 2 {
        return Err(Error::Argument(format!(
            "bins must be at least 2, got {bins}"
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "cannot compare an empty duration sample".into(),
        ));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let d = emd_1d(&histogram(a, lo, hi, bins), &histogram(b, lo, hi, bins));
    Ok(if normalize { d / (bins - 1) as f64 } else { d })
}
