//! Standard normal density, distribution and quantile functions.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, computed through `erfc` so the lower tail keeps full relative precision.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`, polished with two Newton steps on `cdf`.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let d = pdf(x);
        if d <= 0.0 {
            break;
        }
        x -= (cdf(x) - p) / d;
    }
    x
}
