use super::{ActsOn, Scalar};
use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals.
///
/// Row `i` reads `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored (kept at zero).
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Tridiag<T> {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            lower: vec![T::zero(); n],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n);
        t.diag.iter_mut().for_each(|d| *d = T::one());
        t
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            T::zero()
        }
    }

    /// `y = A x`.
    pub fn apply<V>(&self, x: &[V]) -> Vec<V>
    where
        T: ActsOn<V>,
        V: Scalar,
    {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].mul_into(x[i]);
                if i > 0 {
                    s += self.lower[i].mul_into(x[i - 1]);
                }
                if i + 1 < n {
                    s += self.upper[i].mul_into(x[i + 1]);
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<T>
    where
        T: nalgebra::Scalar,
    {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// LU factorization without pivoting.
    ///
    /// Every system built by this crate is strictly diagonally dominant by
    /// rows, where elimination without pivoting is stable.
    pub fn factor(&self) -> Result<TriLu<T>> {
        let n = self.dim();
        let mut mult = vec![T::zero(); n];
        let mut piv = vec![T::zero(); n];
        let scale = self
            .diag
            .iter()
            .chain(&self.upper)
            .chain(&self.lower)
            .fold(0.0f64, |m, v| m.max(v.modulus()))
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                mult[i] = self.lower[i] / piv[i - 1];
                d -= mult[i] * self.upper[i - 1];
            }
            if !(d.modulus() > 1e-300 * scale) || !d.finite() {
                return Err(Error::numerical(format!(
                    "zero pivot at row {i} in tridiagonal factorization"
                )));
            }
            piv[i] = d;
        }
        Ok(TriLu {
            mult,
            piv,
            upper: self.upper.clone(),
        })
    }
}

/// Factorization produced by [`Tridiag::factor`].
#[derive(Clone, Debug)]
pub struct TriLu<F> {
    mult: Vec<F>,
    piv: Vec<F>,
    upper: Vec<F>,
}

impl<F: Scalar> TriLu<F> {
    pub fn dim(&self) -> usize {
        self.piv.len()
    }

    /// Overwrites `x` with `A^{-1} x`.
    pub fn solve_in_place<T: Scalar>(&self, x: &mut [T])
    where
        F: ActsOn<T>,
    {
        let n = self.dim();
        assert_eq!(x.len(), n, "right-hand side length mismatch");
        for i in 1..n {
            let prev = x[i - 1];
            x[i] -= self.mult[i].mul_into(prev);
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v -= self.upper[i].mul_into(x[i + 1]);
            }
            x[i] = F::div_into(v, self.piv[i]);
        }
    }

    pub fn solve<T: Scalar>(&self, b: &[T]) -> Vec<T>
    where
        F: ActsOn<T>,
    {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sample() -> Tridiag<f64> {
        Tridiag {
            lower: vec![0.0, -1.0, -0.5, -2.0],
            diag: vec![4.0, 3.0, 5.0, 6.0],
            upper: vec![-1.0, -1.5, -1.0, 0.0],
        }
    }

    #[test]
    fn real_solve_roundtrip() {
        let a = sample();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = a.factor().unwrap().solve(&b);
        let r = a.apply(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn real_factor_complex_rhs() {
        let a = sample();
        let b = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
            Complex64::new(-1.0, 1.0),
        ];
        let x = a.factor().unwrap().solve(&b);
        let r = a.apply(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Tridiag {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(a.factor(), Err(Error::Numerical(_))));
    }
}
