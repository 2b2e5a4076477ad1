//! Action of the matrix exponential through implicit-Euler steps.
//!
//! `exp(A t) b ≈ (I - A t/m)^{-m} b`, with the leading error terms cancelled
//! by combining runs at `m`, `2m` (and `4m`) steps.

use super::dense::{matrix_power, real_inverse, RMat};
use super::tridiag::{TriLu, Tridiag};
use super::{ActsOn, Scalar};
use crate::error::{Error, Result};

/// Step-extrapolation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extrapolation {
    /// Plain `(I - A t/m)^{-m}`.
    None,
    /// `2 u(2m) - u(m)`: second order in `1/m`.
    TwoLevel,
    /// `(u(m) - 6 u(2m) + 8 u(4m)) / 3`: third order in `1/m`.
    ThreeLevel,
}

impl Extrapolation {
    fn levels(self) -> &'static [(usize, f64)] {
        match self {
            Extrapolation::None => &[(1, 1.0)],
            Extrapolation::TwoLevel => &[(1, -1.0), (2, 2.0)],
            Extrapolation::ThreeLevel => &[(1, 1.0 / 3.0), (2, -2.0), (4, 8.0 / 3.0)],
        }
    }
}

/// How `exp(A t)` (or its action) is approximated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExpmvScheme {
    /// Implicit-Euler steps with extrapolation.
    Rational { steps: usize, extrapolation: Extrapolation },
    /// Dense Padé scaling-and-squaring (`nalgebra`), mainly for reference.
    Exact,
}

impl Default for ExpmvScheme {
    fn default() -> Self {
        ExpmvScheme::Rational {
            steps: 16,
            extrapolation: Extrapolation::ThreeLevel,
        }
    }
}

impl ExpmvScheme {
    pub fn rational(steps: usize, extrapolation: Extrapolation) -> Self {
        ExpmvScheme::Rational { steps, extrapolation }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExpmvScheme::Rational { steps: 0, .. } => Err(Error::config("expmv.steps", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Prepared `exp(A t)` action for a real tridiagonal `A`.
///
/// The factorizations of `I - A t/k` are real and reused across any number
/// of real or complex right-hand sides.
#[derive(Clone, Debug)]
pub struct TriExpmv {
    levels: Vec<(usize, f64, TriLu<f64>)>,
    dense: Option<RMat>,
    zero_time: bool,
}

impl TriExpmv {
    pub fn new(a: &Tridiag<f64>, t: f64, scheme: ExpmvScheme) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("expmv time must be >= 0, got {t}")));
        }
        scheme.validate()?;
        if t == 0.0 {
            return Ok(TriExpmv {
                levels: vec![],
                dense: None,
                zero_time: true,
            });
        }
        match scheme {
            ExpmvScheme::Exact => Ok(TriExpmv {
                levels: vec![],
                dense: Some((a.to_dense() * t).exp()),
                zero_time: false,
            }),
            ExpmvScheme::Rational { steps, extrapolation } => {
                let mut levels = Vec::new();
                for &(mult, w) in extrapolation.levels() {
                    let k = steps * mult;
                    let tau = t / k as f64;
                    let mut sys = Tridiag::identity(a.dim());
                    for i in 0..a.dim() {
                        sys.diag[i] -= tau * a.diag[i];
                        sys.lower[i] = -tau * a.lower[i];
                        sys.upper[i] = -tau * a.upper[i];
                    }
                    levels.push((k, w, sys.factor()?));
                }
                Ok(TriExpmv {
                    levels,
                    dense: None,
                    zero_time: false,
                })
            }
        }
    }

    /// `exp(A t) b`.
    pub fn apply<T: Scalar>(&self, b: &[T]) -> Vec<T>
    where
        f64: ActsOn<T>,
    {
        if self.zero_time {
            return b.to_vec();
        }
        if let Some(e) = &self.dense {
            let n = b.len();
            return (0..n)
                .map(|i| {
                    let mut s = T::zero();
                    for j in 0..n {
                        s += e[(i, j)].mul_into(b[j]);
                    }
                    s
                })
                .collect();
        }
        let mut out = vec![T::zero(); b.len()];
        for (k, w, lu) in &self.levels {
            let mut x = b.to_vec();
            for _ in 0..*k {
                lu.solve_in_place(&mut x);
            }
            for (o, xi) in out.iter_mut().zip(&x) {
                *o += *xi * *w;
            }
        }
        out
    }
}

/// `exp(A t)` for a dense real matrix, with the same rational
/// approximation as [`TriExpmv`] so that both paths agree to rounding.
pub fn expm_dense(a: &RMat, t: f64, scheme: ExpmvScheme) -> Result<RMat> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("expm time must be >= 0, got {t}")));
    }
    scheme.validate()?;
    let n = a.nrows();
    if t == 0.0 || n == 0 {
        return Ok(RMat::identity(n, n));
    }
    match scheme {
        ExpmvScheme::Exact => Ok((a * t).exp()),
        ExpmvScheme::Rational { steps, extrapolation } => {
            let mut out = RMat::zeros(n, n);
            for &(mult, w) in extrapolation.levels() {
                let k = steps * mult;
                let sys = RMat::identity(n, n) - a * (t / k as f64);
                let r = real_inverse(&sys, "implicit-Euler step")?;
                out += matrix_power(&r, k) * w;
            }
            Ok(out)
        }
    }
}

/// One-shot `exp(A t) b` for a tridiagonal `A`.
pub fn expmv<T: Scalar>(a: &Tridiag<f64>, t: f64, b: &[T], scheme: ExpmvScheme) -> Result<Vec<T>>
where
    f64: ActsOn<T>,
{
    Ok(TriExpmv::new(a, t, scheme)?.apply(b))
}
