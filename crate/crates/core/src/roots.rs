//! Bracketed one-dimensional root finding.
//!
//! Every solver here keeps a sign-change bracket and only accepts a Newton
//! step when it lands strictly inside the current bracket and shrinks it fast
//! enough; otherwise it bisects. Endpoints are never evaluated, so brackets
//! may end on poles.

use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

/// Finds a root of an increasing-through-zero function on `(lo, hi)`.
///
/// The caller guarantees `f(lo+) < 0 < f(hi-)` as one-sided limits.
/// `f` returns `(value, derivative)`. Iteration stops when the bracket is
/// narrower than `xtol` or the midpoint collides with an endpoint.
pub fn newton_bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::input(format!("bad bracket [{lo}, {hi}]")));
    }
    let mut x = 0.5 * (lo + hi);
    let mut prev_width = hi - lo;
    for _ in 0..MAX_ITER {
        let (v, d) = f(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(x);
        }
        let newton = if d.is_finite() && d != 0.0 && v.is_finite() {
            x - v / d
        } else {
            f64::NAN
        };
        if newton > lo && newton < hi && (newton - x).abs() <= 0.5 * xtol {
            return Ok(newton);
        }
        // Newton is only trusted inside the bracket, and only while the
        // bracket keeps shrinking at least as fast as bisection would.
        let stalled = width > 0.5 * prev_width;
        prev_width = width;
        x = if !stalled && newton > lo && newton < hi { newton } else { mid };
    }
    Err(Error::NoConvergence {
        what: "bracketed Newton".into(),
        iterations: MAX_ITER,
    })
}

/// Plain bisection for an increasing-through-zero function on `(lo, hi)`.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::input(format!("bad bracket [{lo}, {hi}]")));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
