//! Euler-summation Fourier-series inversion of Laplace transforms.
//!
//! ```text
//! g(t) ≈ e^{A/2}/(2t) Re ĝ(A/2t) + e^{A/2}/t Σ_{j=1}^{k1+k2} (-1)^j β_j Re ĝ((A + 2jπi)/2t)
//! β_j = Σ_{l=max(0, j-k2)}^{k1} C(k1, l) 2^{-k1}
//! ```
//!
//! `β_j` is the Euler (binomial) average of the partial sums `s_{k2}..s_{k2+k1}`
//! rewritten as per-term weights. The discretization error is about `e^{-A}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_A: f64 = 15.0;
pub const DEFAULT_K1: usize = 20;
pub const DEFAULT_K2: usize = 20;

/// Nodes and weights for one evaluation time.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceGrid {
    pub t: f64,
    pub a: f64,
    pub k1: usize,
    pub k2: usize,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl LaplaceGrid {
    pub fn new(t: f64, a: f64, k1: usize, k2: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("inversion time must be positive, got {t}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::config("inversion.A", format!("must be positive, got {a}")));
        }
        if k1 > 60 {
            return Err(Error::config("inversion.k1", "at most 60 binomial terms"));
        }
        let scale = (a / 2.0).exp() / t;
        let norm = 0.5f64.powi(k1 as i32);
        let count = k1 + k2 + 1;
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        nodes.push(Complex64::new(a / (2.0 * t), 0.0));
        weights.push(scale / 2.0);
        for j in 1..count {
            let beta: f64 = (j.saturating_sub(k2)..=k1).map(|l| binomial(k1, l) * norm).sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            nodes.push(Complex64::new(a, 2.0 * j as f64 * std::f64::consts::PI) / (2.0 * t));
            weights.push(scale * sign * beta);
        }
        Ok(LaplaceGrid {
            t,
            a,
            k1,
            k2,
            nodes,
            weights,
        })
    }

    /// Defaults `A = 15`, `k1 = k2 = 20`.
    pub fn with_defaults(t: f64) -> Result<Self> {
        Self::new(t, DEFAULT_A, DEFAULT_K1, DEFAULT_K2)
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of real parts, in node order.
    pub fn combine(&self, values: &[Complex64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v.re).sum()
    }

    /// Inverts a scalar transform; nodes are evaluated concurrently.
    pub fn invert<F>(&self, transform: F) -> Result<f64>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync + Send,
    {
        let values = self.evaluate(transform)?;
        Ok(self.combine(&values))
    }

    /// Inverts a vector-valued transform componentwise.
    pub fn invert_vec<F>(&self, transform: F) -> Result<Vec<f64>>
    where
        F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync + Send,
    {
        let values = self.evaluate(transform)?;
        let n = values.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (w, v) in self.weights.iter().zip(&values) {
            for (o, z) in out.iter_mut().zip(v) {
                *o += w * z.re;
            }
        }
        Ok(out)
    }

    fn evaluate<R, F>(&self, transform: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(Complex64) -> Result<R> + Sync + Send,
    {
        par::map(&self.nodes, |j, &q| {
            transform(q).map_err(|e| Error::numerical(format!("transform failed at node {j} (q = {q}): {e}")))
        })
        .into_iter()
        .collect()
    }
}
