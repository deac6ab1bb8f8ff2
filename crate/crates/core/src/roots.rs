//! Bracketed scalar root finding: bisection down to a coarse tolerance,
//! then Newton steps kept inside the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub bisect_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-8,
            newton_tol: 1e-13,
            max_iter: 200,
        }
    }
}

/// Finds a root of `f` in `[lo, hi]`, which must bracket a sign change.
pub fn bisect_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, opts: RootOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoBracket(format!("[{lo}, {hi}]")));
    }

    let mut iter = 0;
    while hi - lo > opts.bisect_tol && iter < opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        iter += 1;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..opts.max_iter {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
        if step.abs() < opts.newton_tol {
            return Ok(x);
        }
    }
    Ok(x)
}
