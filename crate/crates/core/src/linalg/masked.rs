//! Masked resolvents `(q M - M G + (I - M))^{-1}`.
//!
//! Rows inside the mask carry the shifted generator; rows outside are the
//! identity, which freezes the chain there. With a full mask this is the
//! plain resolvent `(q I - G)^{-1}`.

use num_complex::Complex64;

use super::dense::{CMat, ComplexLu, RMat};
use super::tridiag::{TriLu, Tridiag};
use crate::error::{Error, Result};
use crate::generator::{Generator, Storage};

/// `q M - M G + (I - M)` for a tridiagonal `G`.
pub fn masked_tridiag(g: &Tridiag<f64>, mask: &[bool], q: Complex64) -> Tridiag<Complex64> {
    let n = g.dim();
    let mut t = Tridiag::<Complex64>::identity(n);
    for i in (0..n).filter(|&i| mask[i]) {
        t.diag[i] = q - g.diag[i];
        t.lower[i] = Complex64::from(-g.lower[i]);
        t.upper[i] = Complex64::from(-g.upper[i]);
    }
    t
}

/// `M G` for a tridiagonal `G` (rows outside the mask zeroed).
pub fn mask_rows_tridiag(g: &Tridiag<f64>, mask: &[bool]) -> Tridiag<f64> {
    let mut t = g.clone();
    for i in (0..g.dim()).filter(|&i| !mask[i]) {
        t.lower[i] = 0.0;
        t.diag[i] = 0.0;
        t.upper[i] = 0.0;
    }
    t
}

/// `q M - M G + (I - M)` for a dense `G`.
pub fn masked_dense(g: &RMat, mask: &[bool], q: Complex64) -> CMat {
    let n = g.nrows();
    CMat::from_fn(n, n, |i, j| {
        if mask[i] {
            let v = Complex64::from(-g[(i, j)]);
            if i == j {
                v + q
            } else {
                v
            }
        } else if i == j {
            Complex64::from(1.0)
        } else {
            Complex64::from(0.0)
        }
    })
}

/// A masked resolvent ready to be factored.
#[derive(Clone, Copy, Debug)]
pub struct MaskedOperator<'a> {
    pub gen: &'a Generator,
    pub mask: &'a [bool],
    pub q: Complex64,
}

/// Reusable factorization of a [`MaskedOperator`].
pub enum MaskedFactor {
    Tri(TriLu<Complex64>),
    Dense(ComplexLu),
}

impl<'a> MaskedOperator<'a> {
    pub fn new(gen: &'a Generator, mask: &'a [bool], q: Complex64) -> Result<Self> {
        if mask.len() != gen.dim() {
            return Err(Error::usage(format!(
                "mask length {} does not match generator dimension {}",
                mask.len(),
                gen.dim()
            )));
        }
        Ok(MaskedOperator { gen, mask, q })
    }

    pub fn factor(&self) -> Result<MaskedFactor> {
        match self.gen.storage() {
            Storage::Tri(t) => masked_tridiag(t, self.mask, self.q)
                .factor()
                .map(MaskedFactor::Tri)
                .map_err(|e| Error::numerical(format!("masked resolvent at q = {}: {e}", self.q))),
            Storage::Dense(m) => ComplexLu::new(
                masked_dense(m, self.mask, self.q),
                &format!("masked resolvent at q = {}", self.q),
            )
            .map(MaskedFactor::Dense),
        }
    }

    /// One-shot solve.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.factor()?.solve(rhs)
    }
}

impl MaskedFactor {
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            MaskedFactor::Tri(lu) => Ok(lu.solve(rhs)),
            MaskedFactor::Dense(lu) => lu.solve_vec(rhs),
        }
    }

    pub fn solve_mat(&self, rhs: &CMat) -> Result<CMat> {
        match self {
            MaskedFactor::Tri(lu) => {
                let mut out = rhs.clone();
                for mut col in out.column_iter_mut() {
                    let mut v: Vec<Complex64> = col.iter().copied().collect();
                    lu.solve_in_place(&mut v);
                    col.iter_mut().zip(v).for_each(|(c, x)| *c = x);
                }
                Ok(out)
            }
            MaskedFactor::Dense(lu) => lu.solve_mat(rhs),
        }
    }
}
