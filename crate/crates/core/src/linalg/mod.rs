//! Structured linear algebra over real and complex scalars.
//!
//! * [`tridiag`]: tridiagonal storage and an LU (Thomas) factorization that
//!   accepts real or complex right-hand sides.
//! * [`dense`]: dense helpers (block extraction, split real/complex products,
//!   complex LU, dense rational matrix exponential).
//! * [`expmv`]: the action `exp(A t) b` by repeated implicit-Euler solves with
//!   step extrapolation.
//! * [`masked`]: masked resolvents `(q M - M G + (I - M))^{-1}`.

pub mod dense;
pub mod expmv;
pub mod masked;
pub mod tridiag;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field scalar used by the solvers: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + 'static
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn zero() -> Self {
        Self::from(0.0)
    }
    fn one() -> Self {
        Self::from(1.0)
    }
    fn modulus(self) -> f64;
    fn real(self) -> f64;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn real(self) -> f64 {
        self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn real(self) -> f64 {
        self.re
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Scalar `F` can act on vectors of `T` (real factors act on complex data).
pub trait ActsOn<T>: Scalar {
    fn mul_into(self, t: T) -> T;
    fn div_into(t: T, by: Self) -> T;
}

impl ActsOn<f64> for f64 {
    fn mul_into(self, t: f64) -> f64 {
        self * t
    }
    fn div_into(t: f64, by: f64) -> f64 {
        t / by
    }
}

impl ActsOn<Complex64> for f64 {
    fn mul_into(self, t: Complex64) -> Complex64 {
        t * self
    }
    fn div_into(t: Complex64, by: f64) -> Complex64 {
        t / by
    }
}

impl ActsOn<Complex64> for Complex64 {
    fn mul_into(self, t: Complex64) -> Complex64 {
        self * t
    }
    fn div_into(t: Complex64, by: Complex64) -> Complex64 {
        t / by
    }
}

/// Lifts a real vector to complex.
pub fn complexify(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Largest entry modulus.
pub fn max_abs<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.modulus()))
}
