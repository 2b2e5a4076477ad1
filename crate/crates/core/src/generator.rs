//! CTMC rate matrix built from a [`ModelSpec`] on a [`Grid`].
//!
//! For an interior state `x` with neighbors `x±`, steps `δ±x` and `δx`:
//!
//! ```text
//! G(x, x+) = (μ̃ δ⁻x + σ̃²) / (2 δ⁺x δx) + Λ(x, x+)
//! G(x, x-) = (-μ̃ δ⁺x + σ̃²) / (2 δ⁻x δx) + Λ(x, x-)
//! G(x, y)  = Λ(x, y)          otherwise
//! ```
//!
//! with `Λ(x, y) = ν(x, I_y - x)` over the cell `I_y` of `y` (the end cells are
//! unbounded), `σ̃² = σ² + ∫_{I_x - x} z² 1{|z|≤1} ν` and
//! `μ̃ = μ - Σ_{y≠x} (y - x) ∫_{I_y - x} 1{|z|≤1} ν`. The end states are absorbing.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::dense::RMat;
use crate::linalg::tridiag::Tridiag;
use crate::linalg::{ActsOn, Scalar};
use crate::model::ModelSpec;
use crate::par;

/// Storage tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Tridiagonal,
    Dense,
}

/// Drift discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DriftScheme {
    /// Central differences everywhere; a negative rate is an error.
    Central,
    /// Central differences, switching a node to one-sided (upwind) drift
    /// when a central rate would be negative.
    #[default]
    CentralWithUpwindFallback,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Tri(Tridiag<f64>),
    Dense(RMat),
}

/// Transition-rate matrix of a finite-state chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    storage: Storage,
    absorbing: Vec<bool>,
    /// Nodes where the drift was discretized one-sided.
    pub upwind_nodes: Vec<usize>,
}

/// Summary produced by [`Generator::row_diagnostics`].
#[derive(Clone, Debug, PartialEq)]
pub struct RowDiagnostics {
    pub structure: Structure,
    pub dim: usize,
    pub min_off_diagonal: f64,
    /// Largest `|row sum| / max(1, |G(x,x)|)`.
    pub max_row_residual: f64,
    pub absorbing_rows: usize,
    pub upwind_nodes: usize,
}

impl RowDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.min_off_diagonal >= 0.0 && self.max_row_residual <= 1e-12
    }
}

impl std::fmt::Display for RowDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "structure={:?} dim={} min_offdiag={:.3e} max_row_residual={:.3e} absorbing={} upwind={} valid={}",
            self.structure,
            self.dim,
            self.min_off_diagonal,
            self.max_row_residual,
            self.absorbing_rows,
            self.upwind_nodes,
            self.is_valid()
        )
    }
}

struct Row {
    up: f64,
    down: f64,
    jumps: Option<Vec<f64>>,
    upwind: bool,
}

fn build_row(model: &ModelSpec, grid: &Grid, bounds: &[f64], i: usize, scheme: DriftScheme) -> Result<Row> {
    let y = grid.nodes();
    let x = y[i];
    let n = y.len();
    let (dp, dm, d) = (grid.delta_plus(i), grid.delta_minus(i), grid.delta(i));
    let sigma = model.vol(x);
    let mut sig2 = sigma * sigma;
    let mut mu = model.drift(x);
    let mut jumps = None;
    if let Some(jm) = &model.jumps {
        let mut lam = vec![0.0; n];
        let mut mubar = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let (a, b) = (bounds[j] - x, bounds[j + 1] - x);
            lam[j] = jm.moment(x, 0, a, b)?;
            if a < 1.0 && b > -1.0 {
                mubar += (y[j] - x) * jm.small_moment(x, 0, a, b)?;
            }
        }
        sig2 += jm.small_moment(x, 2, bounds[i] - x, bounds[i + 1] - x)?;
        mu -= mubar;
        if let Some(j) = lam.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::numerical(format!(
                "jump cell mass at node {i} -> {j} is invalid ({})",
                lam[j]
            )));
        }
        jumps = Some(lam);
    }
    let lam_up = jumps.as_ref().map_or(0.0, |l| l[i + 1]);
    let lam_dn = jumps.as_ref().map_or(0.0, |l| l[i - 1]);
    let mut up = (mu * dm + sig2) / (2.0 * dp * d) + lam_up;
    let mut down = (-mu * dp + sig2) / (2.0 * dm * d) + lam_dn;
    let mut upwind = false;
    if up < 0.0 || down < 0.0 {
        match scheme {
            DriftScheme::Central => {
                return Err(Error::config(
                    "generator.drift_scheme",
                    format!(
                        "central differencing gives a negative rate at node {i} (x = {x}): \
                         up = {up:.6e}, down = {down:.6e}; refine the grid or enable the upwind fallback"
                    ),
                ))
            }
            DriftScheme::CentralWithUpwindFallback => {
                up = sig2 / (2.0 * dp * d) + lam_up;
                down = sig2 / (2.0 * dm * d) + lam_dn;
                if mu > 0.0 {
                    up += mu / dp;
                } else {
                    down -= mu / dm;
                }
                upwind = true;
            }
        }
    }
    if !(up.is_finite() && down.is_finite()) {
        return Err(Error::numerical(format!("non-finite rate at node {i} (x = {x})")));
    }
    Ok(Row {
        up,
        down,
        jumps,
        upwind,
    })
}

impl Generator {
    /// Builds the chain generator of `model` on `grid`.
    pub fn build(model: &ModelSpec, grid: &Grid, scheme: DriftScheme) -> Result<Self> {
        let n = grid.len();
        let bounds = grid.cell_bounds();
        let rows = par::map_range(n - 2, |k| build_row(model, grid, &bounds, k + 1, scheme));
        let mut absorbing = vec![false; n];
        absorbing[0] = true;
        absorbing[n - 1] = true;
        let mut upwind_nodes = Vec::new();
        let storage = if model.has_jumps() {
            let mut m = RMat::zeros(n, n);
            for (k, row) in rows.into_iter().enumerate() {
                let row = row?;
                let i = k + 1;
                if row.upwind {
                    upwind_nodes.push(i);
                }
                let lam = row.jumps.expect("jump row");
                let mut sum = 0.0;
                for j in 0..n {
                    let v = if j == i + 1 {
                        row.up
                    } else if j + 1 == i {
                        row.down
                    } else if j == i {
                        continue;
                    } else {
                        lam[j]
                    };
                    m[(i, j)] = v;
                    sum += v;
                }
                m[(i, i)] = -sum;
            }
            Storage::Dense(m)
        } else {
            let mut t = Tridiag::zeros(n);
            for (k, row) in rows.into_iter().enumerate() {
                let row = row?;
                let i = k + 1;
                if row.upwind {
                    upwind_nodes.push(i);
                }
                t.upper[i] = row.up;
                t.lower[i] = row.down;
                t.diag[i] = -(row.up + row.down);
            }
            Storage::Tri(t)
        };
        if !upwind_nodes.is_empty() {
            log::debug!(
                "upwind drift used at {} of {} interior nodes",
                upwind_nodes.len(),
                n - 2
            );
        }
        Ok(Generator {
            storage,
            absorbing,
            upwind_nodes,
        })
    }

    /// Wraps a tridiagonal rate matrix; zero rows are marked absorbing.
    pub fn from_tridiag(t: Tridiag<f64>) -> Result<Self> {
        let n = t.dim();
        let absorbing = (0..n)
            .map(|i| t.diag[i] == 0.0 && t.lower[i] == 0.0 && t.upper[i] == 0.0)
            .collect();
        let g = Generator {
            storage: Storage::Tri(t),
            absorbing,
            upwind_nodes: vec![],
        };
        g.validate_shape()?;
        Ok(g)
    }

    /// Wraps a dense rate matrix; zero rows are marked absorbing.
    pub fn from_dense(m: RMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::usage("generator matrix must be square"));
        }
        let absorbing = m.row_iter().map(|r| r.iter().all(|&v| v == 0.0)).collect();
        let g = Generator {
            storage: Storage::Dense(m),
            absorbing,
            upwind_nodes: vec![],
        };
        g.validate_shape()?;
        Ok(g)
    }

    fn validate_shape(&self) -> Result<()> {
        let d = self.row_diagnostics();
        if d.min_off_diagonal < 0.0 {
            return Err(Error::domain(format!(
                "generator has a negative off-diagonal rate ({})",
                d.min_off_diagonal
            )));
        }
        if d.max_row_residual > 1e-10 {
            return Err(Error::domain(format!(
                "generator rows do not sum to zero (residual {:.3e})",
                d.max_row_residual
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.absorbing.len()
    }

    pub fn structure(&self) -> Structure {
        match self.storage {
            Storage::Tri(_) => Structure::Tridiagonal,
            Storage::Dense(_) => Structure::Dense,
        }
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn tridiag(&self) -> Option<&Tridiag<f64>> {
        match &self.storage {
            Storage::Tri(t) => Some(t),
            Storage::Dense(_) => None,
        }
    }

    pub fn absorbing(&self) -> &[bool] {
        &self.absorbing
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Tri(t) => t.get(i, j),
            Storage::Dense(m) => m[(i, j)],
        }
    }

    pub fn to_dense(&self) -> RMat {
        match &self.storage {
            Storage::Tri(t) => t.to_dense(),
            Storage::Dense(m) => m.clone(),
        }
    }

    /// Dense copy of the storage as a general generator.
    pub fn densified(&self) -> Generator {
        Generator {
            storage: Storage::Dense(self.to_dense()),
            absorbing: self.absorbing.clone(),
            upwind_nodes: self.upwind_nodes.clone(),
        }
    }

    /// Nonzero entries of row `i` as `(column, rate)`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Tri(t) => {
                let mut r = Vec::with_capacity(3);
                if i > 0 && t.lower[i] != 0.0 {
                    r.push((i - 1, t.lower[i]));
                }
                if t.diag[i] != 0.0 {
                    r.push((i, t.diag[i]));
                }
                if i + 1 < t.dim() && t.upper[i] != 0.0 {
                    r.push((i + 1, t.upper[i]));
                }
                r
            }
            Storage::Dense(m) => m
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect(),
        }
    }

    /// `G v`.
    pub fn apply<T: Scalar>(&self, v: &[T]) -> Vec<T>
    where
        f64: ActsOn<T>,
    {
        match &self.storage {
            Storage::Tri(t) => t.apply(v),
            Storage::Dense(m) => (0..self.dim())
                .map(|i| {
                    let mut s = T::zero();
                    for (j, x) in v.iter().enumerate() {
                        let g = m[(i, j)];
                        if g != 0.0 {
                            s += g.mul_into(*x);
                        }
                    }
                    s
                })
                .collect(),
        }
    }

    /// Complex `G v`.
    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply(v)
    }

    pub fn row_diagnostics(&self) -> RowDiagnostics {
        let n = self.dim();
        let mut min_off = f64::INFINITY;
        let mut max_res: f64 = 0.0;
        for i in 0..n {
            let mut sum = 0.0;
            let mut diag = 0.0;
            for (j, v) in self.row(i) {
                sum += v;
                if j == i {
                    diag = v;
                } else {
                    min_off = min_off.min(v);
                }
            }
            max_res = max_res.max(sum.abs() / diag.abs().max(1.0));
        }
        if min_off == f64::INFINITY {
            min_off = 0.0;
        }
        RowDiagnostics {
            structure: self.structure(),
            dim: n,
            min_off_diagonal: min_off,
            max_row_residual: max_res,
            absorbing_rows: self.absorbing.iter().filter(|a| **a).count(),
            upwind_nodes: self.upwind_nodes.len(),
        }
    }

    /// Triplet CSV `row,col,rate` of the nonzero entries.
    pub fn to_triplet_csv(&self) -> String {
        let mut s = String::from("row,col,rate\n");
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                let _ = writeln!(s, "{i},{j},{v:.17e}");
            }
        }
        s
    }

    /// Test hook: overwrite one entry, leaving everything else untouched.
    #[doc(hidden)]
    pub fn set_entry_unchecked(&mut self, i: usize, j: usize, v: f64) {
        match &mut self.storage {
            Storage::Tri(t) => {
                if i == j {
                    t.diag[i] = v
                } else if j + 1 == i {
                    t.lower[i] = v
                } else if i + 1 == j {
                    t.upper[i] = v
                } else {
                    panic!("entry ({i},{j}) is outside the tridiagonal band")
                }
            }
            Storage::Dense(m) => m[(i, j)] = v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_preset, default_params, Preset};

    fn model(p: Preset) -> ModelSpec {
        build_preset(p, &default_params(p)).unwrap().single().unwrap()
    }

    #[test]
    fn bm_is_the_laplacian() {
        let h = 0.1;
        let g = Generator::build(
            &model(Preset::Bm),
            &Grid::uniform(-1.0, 1.0, 20).unwrap(),
            DriftScheme::Central,
        )
        .unwrap();
        assert_eq!(g.structure(), Structure::Tridiagonal);
        for i in 1..20 {
            assert!((g.get(i, i + 1) - 0.5 / (h * h)).abs() < 1e-9);
            assert!((g.get(i, i - 1) - 0.5 / (h * h)).abs() < 1e-9);
            assert!((g.get(i, i) + 1.0 / (h * h)).abs() < 1e-9);
        }
        assert!(g.row(0).is_empty() && g.row(20).is_empty());
        assert!(g.row_diagnostics().is_valid());
    }

    #[test]
    fn corrupted_entry_is_flagged() {
        let mut g = Generator::build(
            &model(Preset::Bm),
            &Grid::uniform(-1.0, 1.0, 10).unwrap(),
            DriftScheme::Central,
        )
        .unwrap();
        g.set_entry_unchecked(3, 4, 60.0);
        let d = g.row_diagnostics();
        assert!(!d.is_valid());
        assert!(d.max_row_residual > 1e-3);
    }

    #[test]
    fn kou_is_dense_and_conserves_mass() {
        let m = model(Preset::Kou);
        let grid = Grid::uniform(3.0, 6.0, 120).unwrap();
        let g = Generator::build(&m, &grid, DriftScheme::default()).unwrap();
        let d = g.row_diagnostics();
        assert_eq!(d.structure, Structure::Dense);
        assert!(d.is_valid(), "{d}");
        // total Lévy mass: every cell except the own cell, plus own-cell mass
        let jm = m.jumps.clone().unwrap();
        let b = grid.cell_bounds();
        let i = 60;
        let x = grid.nodes()[i];
        let own = jm.moment(x, 0, b[i] - x, b[i + 1] - x).unwrap();
        let mut lam = 0.0;
        for j in 0..grid.len() {
            if j != i {
                lam += jm.moment(x, 0, b[j] - x, b[j + 1] - x).unwrap();
            }
        }
        assert!(((lam + own) - 3.0).abs() < 1e-8 * 3.0);
    }

    #[test]
    fn central_only_reports_the_node() {
        // strong drift, coarse grid
        let m = ModelSpec::new("drifty", |_| 50.0, |_| 0.1);
        let grid = Grid::uniform(0.0, 1.0, 10).unwrap();
        match Generator::build(&m, &grid, DriftScheme::Central) {
            Err(Error::Config { message, .. }) => assert!(message.contains("node 1")),
            other => panic!("unexpected {other:?}"),
        }
        let g = Generator::build(&m, &grid, DriftScheme::CentralWithUpwindFallback).unwrap();
        assert!(g.row_diagnostics().is_valid());
        assert_eq!(g.upwind_nodes.len(), 9);
    }

    #[test]
    fn triplet_csv_lists_nonzeros() {
        let g = Generator::build(
            &model(Preset::Bm),
            &Grid::uniform(0.0, 1.0, 4).unwrap(),
            DriftScheme::Central,
        )
        .unwrap();
        let csv = g.to_triplet_csv();
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
    }
}
