//! Bracketed one-dimensional searches used by the equilibrium solvers.

use crate::error::{Result, WaldError};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Stops when the bracket is narrower than `rel_tol * max(1, |x|)`.
/// Returns the final bracket `(lo, hi)` and the best point.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let best = if f1 >= f2 { x1 } else { x2 };
    (lo, hi, best)
}

pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64, f64) {
    golden_max(|x| -f(x), lo, hi, rel_tol)
}

/// Finds `hi > start` with `f(hi) < f(mid)` for some interior `mid` by doubling,
/// giving a bracket `[lo, hi]` around the maximum of a quasi-concave `f` on `(0, ∞)`.
pub fn bracket_max_by_doubling<F: FnMut(f64) -> f64>(mut f: F, start: f64, limit: f64) -> Result<(f64, f64)> {
    let mut lo = 0.0;
    let mut mid = start;
    let mut f_mid = f(mid);
    loop {
        let hi = 2.0 * mid;
        if hi > limit {
            return Err(WaldError::Solver {
                solver: "bracket expansion",
                detail: format!("objective still increasing at {mid:e}; no interior maximum"),
                residual: f64::INFINITY,
            });
        }
        let f_hi = f(hi);
        if f_hi < f_mid {
            return Ok((lo, hi));
        }
        lo = mid;
        mid = hi;
        f_mid = f_hi;
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]` down to floating-point resolution
/// or `abs_tol`, whichever comes first.
pub fn bisect<G: FnMut(f64) -> f64>(mut g: G, mut lo: f64, mut hi: f64, abs_tol: f64) -> Result<f64> {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || g_lo.is_nan() || g_hi.is_nan() {
        return Err(WaldError::Solver {
            solver: "bisection",
            detail: format!("no sign change on [{lo}, {hi}]"),
            residual: g_lo.abs().min(g_hi.abs()),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol || mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
