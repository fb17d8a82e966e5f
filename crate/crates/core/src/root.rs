//! Scalar root bracketing and bisection.

use crate::error::{Error, Result};

/// Relative width at which bisection stops.
pub const BISECTION_TOL: f64 = 1e-12;
/// Iteration cap for bisection and for bracket growth.
pub const BISECTION_MAX_ITER: usize = 200;

/// Bisection for a sign change of `f` on `[lo, hi]`. Stops when the bracket
/// width is at most `tol · |mid|` (relative) or after `max_iter` halvings.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.is_nan() {
            return Err(Error::Numerical(format!("function is NaN at {mid}")));
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

/// Finds a root of `f` on `(lo, ∞)` by doubling the distance `Δ` of the
/// upper end from `lo`, starting at `lo + 1`, until the sign differs from
/// `f(lo)`; then bisects.
pub fn bracket_and_bisect(mut f: impl FnMut(f64) -> f64, lo: f64) -> Result<f64> {
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut delta = 1.0;
    for _ in 0..BISECTION_MAX_ITER {
        let hi = lo + delta;
        let f_hi = f(hi);
        if f_hi.is_nan() {
            return Err(Error::Numerical(format!("function is NaN at {hi}")));
        }
        if f_hi == 0.0 || f_hi.signum() != f_lo.signum() {
            return bisect(f, lo, hi, BISECTION_TOL, BISECTION_MAX_ITER);
        }
        delta *= 2.0;
    }
    Err(Error::Numerical(format!("could not bracket a root above {lo}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn grows_bracket() {
        let r = bracket_and_bisect(|x| 1000.0 - x, 0.5).unwrap();
        assert!((r - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
        assert!(bracket_and_bisect(|_| 1.0, 0.0).is_err());
    }
}
