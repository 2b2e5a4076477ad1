//! Adaptive Gauss–Kronrod quadrature and the exponential integral E1.
//!
//! Used for jump-measure cell integrals of user-supplied densities and, in
//! tests, as the oracle for the closed-form Kou / variance-gamma cell masses.

use crate::error::{Error, Result};

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

const MAX_DEPTH: usize = 48;

/// Tolerances for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-12 }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("finite interval expected, got [{a}, {b}]")));
    }
    let (whole, _) = kronrod(&f, a, b);
    let budget = tol.abs.max(tol.rel * whole.abs());
    let mut total = 0.0;
    let mut stack = vec![(a, b, budget, 0usize)];
    while let Some((lo, hi, eps, depth)) = stack.pop() {
        let (val, err) = kronrod(&f, lo, hi);
        if err <= eps || (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs()) {
            total += val;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(Error::numerical(format!(
                "quadrature did not converge on [{a}, {b}] (stalled near [{lo}, {hi}])"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, 0.5 * eps, depth + 1));
        stack.push((mid, hi, 0.5 * eps, depth + 1));
    }
    if !total.is_finite() {
        return Err(Error::numerical(format!(
            "quadrature produced a non-finite value on [{a}, {b}]"
        )));
    }
    Ok(total)
}

/// Integrates over `[a, b]` where either end may be infinite.
///
/// Infinite ends are mapped onto the unit interval with `z = a + t / (1 - t)`.
pub fn integrate_any<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate(f, a, b, tol),
        (true, false) => integrate(
            |t: f64| {
                let s = 1.0 - t;
                let v = f(a + t / s) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => integrate(
            |t: f64| {
                let s = 1.0 - t;
                let v = f(b - t / s) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => {
            let left = integrate_dyn(f, a, 0.0, tol)?;
            let right = integrate_dyn(f, 0.0, b, tol)?;
            Ok(left + right)
        }
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        // power series
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // continued fraction, modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| x.powi(6), -1.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_any(|x| (-3.0 * x).exp(), 0.5, f64::INFINITY, Tolerance::default()).unwrap();
        assert!((v - (-1.5f64).exp() / 3.0).abs() < 1e-13);
        let v = integrate_any(|x| (2.0 * x).exp(), f64::NEG_INFINITY, -1.0, Tolerance::default()).unwrap();
        assert!((v - (-2.0f64).exp() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn e1_matches_quadrature() {
        for &x in &[1e-3, 0.01, 0.3, 1.0, 1.7, 5.0, 30.0] {
            let tol = Tolerance { abs: 1e-30, rel: 1e-13 };
            let q = integrate_any(|t| (-t).exp() / t, x, f64::INFINITY, tol).unwrap();
            let e = exp_integral_e1(x);
            assert!((q - e).abs() <= 1e-11 * e.abs(), "x={x}: {q} vs {e}");
        }
    }

    #[test]
    fn e1_reference_values() {
        // tabulated values
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-15);
    }
}
