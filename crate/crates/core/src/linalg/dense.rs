//! Dense helpers built on `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Rows `rows` and columns `cols` of `m`.
pub fn submatrix(m: &RMat, rows: &[usize], cols: &[usize]) -> RMat {
    RMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn split(m: &CMat) -> (RMat, RMat) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub fn join(re: &RMat, im: &RMat) -> CMat {
    re.zip_map(im, Complex64::new)
}

/// `a * b` for real `a`, complex `b`, as two real products.
pub fn mul_rc(a: &RMat, b: &CMat) -> CMat {
    let (br, bi) = split(b);
    join(&(a * br), &(a * bi))
}

/// `a * b` for complex `a`, `b`, as three real products (Gauss trick).
pub fn mul_cc(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let t1 = &ar * &br;
    let t2 = &ai * &bi;
    let t3 = (&ar + &ai) * (&br + &bi);
    let im = t3 - &t1 - &t2;
    join(&(t1 - t2), &im)
}

/// `a * v` for real `a`, complex `v`.
pub fn mul_rc_vec(a: &RMat, v: &[Complex64]) -> Vec<Complex64> {
    let re = DVector::from_iterator(v.len(), v.iter().map(|z| z.re));
    let im = DVector::from_iterator(v.len(), v.iter().map(|z| z.im));
    let (r, i) = (a * re, a * im);
    r.iter().zip(i.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect()
}

/// LU factorization with partial pivoting of a complex matrix, stored
/// row-major so elimination and substitution run over contiguous rows.
pub struct ComplexLu {
    a: Vec<Complex64>,
    perm: Vec<usize>,
    n: usize,
}

/// `dst -= l * src` elementwise.
#[inline]
fn axpy_neg(dst: &mut [Complex64], l: Complex64, src: &[Complex64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d -= l * *s;
    }
}

impl ComplexLu {
    pub fn new(m: CMat, what: &str) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::usage(format!("{what}: matrix is not square")));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                a[i * n + j] = m[(i, j)];
            }
        }
        let scale = a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a[i * n + k].norm()))
                    .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > 1e-14 * scale) {
                return Err(Error::numerical(format!(
                    "{what}: matrix is singular to working precision (pivot {pmax:.3e}, scale {scale:.3e})"
                )));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let (top, rest) = a.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            let inv = Complex64::new(1.0, 0.0) / pivot_row[k];
            for row in rest.chunks_exact_mut(n) {
                if row[k] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let l = row[k] * inv;
                row[k] = l;
                axpy_neg(&mut row[k + 1..], l, &pivot_row[k + 1..]);
            }
        }
        Ok(ComplexLu { a, perm, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for a row-major block of `m` right-hand sides in place.
    fn solve_rows(&self, x: &mut [Complex64], m: usize) {
        let n = self.n;
        for i in 0..n {
            let (done, cur) = x.split_at_mut(i * m);
            let row = &mut cur[..m];
            for k in 0..i {
                let l = self.a[i * n + k];
                if l != Complex64::new(0.0, 0.0) {
                    axpy_neg(row, l, &done[k * m..(k + 1) * m]);
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * m);
            let row = &mut head[i * m..];
            for k in i + 1..n {
                let u = self.a[i * n + k];
                if u != Complex64::new(0.0, 0.0) {
                    axpy_neg(row, u, &tail[(k - i - 1) * m..(k - i) * m]);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / self.a[i * n + i];
            row.iter_mut().for_each(|v| *v *= inv);
        }
    }

    pub fn solve_mat(&self, b: &CMat) -> Result<CMat> {
        let (n, m) = (self.n, b.ncols());
        if b.nrows() != n {
            return Err(Error::usage("right-hand side has the wrong number of rows"));
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n * m];
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m {
                x[i * m + j] = b[(p, j)];
            }
        }
        self.solve_rows(&mut x, m);
        Ok(CMat::from_row_slice(n, m, &x))
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::usage("right-hand side has the wrong length"));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_rows(&mut x, 1);
        Ok(x)
    }
}

/// Real LU with a singularity check.
pub fn real_inverse(m: &RMat, what: &str) -> Result<RMat> {
    let n = m.nrows();
    let lu = m.clone().lu();
    lu.try_inverse()
        .ok_or_else(|| Error::numerical(format!("{what}: real {n}x{n} matrix is singular")))
}

/// `m^k` by repeated squaring.
pub fn matrix_power(m: &RMat, mut k: usize) -> RMat {
    let n = m.nrows();
    let mut result = RMat::identity(n, n);
    let mut base = m.clone();
    let mut first = true;
    while k > 0 {
        if k & 1 == 1 {
            result = if first { base.clone() } else { &result * &base };
            first = false;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// The complex matrix `q I - a`.
pub fn shifted(q: Complex64, a: &RMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| {
        let v = Complex64::new(-a[(i, j)], 0.0);
        if i == j {
            v + q
        } else {
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_products_match_direct() {
        let a = RMat::from_fn(5, 4, |i, j| (i as f64 + 1.0) * 0.3 - j as f64 * 0.7);
        let b = CMat::from_fn(4, 3, |i, j| Complex64::new(i as f64 - 1.5, 0.2 * j as f64 + 0.1));
        let c = CMat::from_fn(3, 5, |i, j| Complex64::new(0.5 * j as f64, i as f64 - 2.0));
        let ac = a.map(|x| Complex64::new(x, 0.0));
        assert!((mul_rc(&a, &b) - &ac * &b).norm() < 1e-12);
        assert!((mul_cc(&b, &c) - &b * &c).norm() < 1e-12);
        let v: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let dv = &ac * DVector::from_column_slice(&v);
        let w = mul_rc_vec(&a, &v);
        for (x, y) in w.iter().zip(dv.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn power_matches_repeated_product() {
        let m = RMat::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let p = matrix_power(&m, 5);
        let q = &m * &m * &m * &m * &m;
        assert!((p - q).norm() < 1e-14);
        assert_eq!(matrix_power(&m, 0), RMat::identity(2, 2));
    }

    #[test]
    fn complex_lu_solves() {
        let m = CMat::from_fn(6, 6, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.3)
        }) + CMat::identity(6, 6) * Complex64::new(0.5, 0.0);
        let b = CMat::from_fn(6, 2, |i, j| Complex64::new(i as f64, j as f64 + 1.0));
        let lu = ComplexLu::new(m.clone(), "test").unwrap();
        let x = lu.solve_mat(&b).unwrap();
        assert!((&m * &x - &b).norm() < 1e-11);
        let v: Vec<Complex64> = b.column(1).iter().copied().collect();
        let y = lu.solve_vec(&v).unwrap();
        for i in 0..6 {
            assert!((y[i] - x[(i, 1)]).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_complex_matrix_is_rejected() {
        let m = CMat::from_element(3, 3, Complex64::new(1.0, 1.0));
        assert!(ComplexLu::new(m, "test").is_err());
    }
}
