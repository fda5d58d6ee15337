//! Shared helpers for probability vectors (soft targets).

use crate::{Error, Result};

/// Scaled 2-norm distance `(sqrt(2)/2) * ||a - b||_2`.
///
/// For two vectors on the probability simplex this lies in `[0, 1]`; it is
/// the per-sample building block of every diversity/similarity/bias measure
/// in the crate.
pub(crate) fn scaled_l2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    core::f64::consts::FRAC_1_SQRT_2 * libm::sqrt(acc)
}

/// Plain 2-norm of `a - b`.
pub(crate) fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    libm::sqrt(acc)
}

/// Index of the largest entry, ties broken toward the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Checks that `row` is a probability vector: entries >= 0, sum within
/// `tol` of 1.
pub(crate) fn check_probability_row(row: &[f64], tol: f64, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &x in row {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::validation(alloc::format!(
                "{what}: entry {x} is not a valid probability"
            )));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > tol {
        return Err(Error::validation(alloc::format!(
            "{what}: row sums to {sum}, expected 1 within {tol}"
        )));
    }
    Ok(())
}

pub(crate) fn check_same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::shape(alloc::format!("{what}: {a} vs {b}")));
    }
    Ok(())
}
