//! One-dimensional root finding and maximization.
//!
//! Everything here assumes the caller has already established monotonicity
//! (for [`bisect`]) or unimodality (for [`golden_max`]) on the search interval.

use crate::error::{Error, Result};

/// Default absolute tolerance for root finding.
pub const ROOT_TOL: f64 = 1e-12;

/// Iteration cap for bisection.
pub const MAX_BISECTION_ITERS: usize = 200;

/// Finds a root of `f` on `[lo, hi]` by bisection.
///
/// Stops once the bracket is narrower than `tol`, or when the midpoint can no
/// longer be distinguished from an endpoint in floating point. A `tol` of zero
/// therefore runs to full machine precision.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(Error::InvalidRange(format!(
            "bisection bracket [{lo}, {hi}]"
        )));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NotBracketed { lo, hi, f_lo, f_hi });
    }

    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`.
pub fn golden_max<F>(f: F, mut a: f64, mut b: f64, tol: f64, max_evals: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a) > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Evenly spaced grid from `start` to `end` inclusive with spacing `step`.
///
/// The endpoint is included when it lies within a small fraction of a step
/// of the last grid point.
pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidRange(format!(
            "grid step {step} must be positive"
        )));
    }
    if !(start <= end) {
        return Err(Error::InvalidRange(format!(
            "grid [{start}, {end}] is empty"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}
