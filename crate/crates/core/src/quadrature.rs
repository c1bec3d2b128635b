//! Adaptive Gauss–Kronrod (7/15-point) quadrature.

use crate::error::{Result, WaldError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 50;

/// One 15-point Kronrod rule on `[a, b]` with the embedded 7-point Gauss
/// estimate; returns `(kronrod, |kronrod − gauss|)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// `∫_a^b f` with signed limits, bisecting until each piece meets its share of
/// `max(abs_tol, rel_tol·|estimate|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, rel_tol, abs_tol).map(|v| -v);
    }
    let (whole, _) = gk15(&f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs());
    let mut worst = 0.0f64;
    let value = adapt(&f, a, b, tol, 0, &mut worst);
    if worst > 0.0 {
        return Err(WaldError::Numerical {
            context: "adaptive Gauss-Kronrod",
            achieved: worst,
            target: tol,
        });
    }
    if !value.is_finite() {
        return Err(WaldError::Numerical {
            context: "adaptive Gauss-Kronrod: non-finite integrand",
            achieved: f64::INFINITY,
            target: tol,
        });
    }
    Ok(value)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, worst: &mut f64) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || !err.is_finite() {
        return value;
    }
    if depth >= MAX_DEPTH {
        *worst = worst.max(err);
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1, worst) + adapt(f, mid, b, 0.5 * tol, depth + 1, worst)
}
