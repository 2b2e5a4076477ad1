//! First-passage building blocks and Laplace transforms of Parisian
//! stopping times.
//!
//! For the excursion set `A` (states `< L` for [`Side::Below`], `> L` for
//! [`Side::Above`]) and its complement `B`, with masks `I_A`, `I_B`:
//!
//! ```text
//! V   = exp(I_A G D) I_A
//! U1  = (q I_A - I_A G + I_B)^{-1} I_B
//! U2  = e^{-qD} V U1
//! U⁻  = (q I_B - I_B G + I_A)^{-1} I_A
//! U   = I_A (U1 - U2) + I_B U⁻
//! H   = e^{-qD} (I - U)^{-1} I_A V,      h = H e
//! ```
//!
//! `H[x, y] = E_x[e^{-qτ} 1{Y_τ = y}]`. Three evaluators are provided:
//! [`first_passage_blocks`] / [`parisian_matrix_literal`] (the formulas above,
//! full matrices), the dense Schur-complement path, and the birth-and-death
//! path for tridiagonal generators, linear in the number of states per `q`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::{Generator, Storage};
use crate::linalg::dense::{mul_cc, mul_rc, mul_rc_vec, submatrix, CMat, ComplexLu, RMat};
use crate::linalg::expmv::{expm_dense, ExpmvScheme, TriExpmv};
use crate::linalg::masked::{mask_rows_tridiag, masked_dense, masked_tridiag};
use crate::linalg::tridiag::Tridiag;

/// Which excursion is timed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Excursions strictly below `L`.
    Below,
    /// Excursions strictly above `L`.
    Above,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "below" | "down" => Ok(Side::Below),
            "above" | "up" => Ok(Side::Above),
            _ => Err(Error::config(
                "parisian.side",
                format!("expected below or above, got `{s}`"),
            )),
        }
    }
}

/// Side, barrier, window and the resulting state masks.
#[derive(Clone, Debug, PartialEq)]
pub struct ParisianProblem {
    pub side: Side,
    pub barrier: f64,
    pub window: f64,
    excursion: Vec<bool>,
}

impl ParisianProblem {
    /// Masks from node positions: `x < L` (below) or `x > L` (above).
    pub fn new(side: Side, barrier: f64, window: f64, nodes: &[f64]) -> Result<Self> {
        let excursion = nodes
            .iter()
            .map(|&x| match side {
                Side::Below => x < barrier,
                Side::Above => x > barrier,
            })
            .collect();
        Self::from_mask(side, barrier, window, excursion)
    }

    /// Explicit excursion mask (e.g. for product state spaces).
    pub fn from_mask(side: Side, barrier: f64, window: f64, excursion: Vec<bool>) -> Result<Self> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::config(
                "parisian.D",
                format!("window must be positive and finite, got {window}"),
            ));
        }
        Ok(ParisianProblem {
            side,
            barrier,
            window,
            excursion,
        })
    }

    pub fn dim(&self) -> usize {
        self.excursion.len()
    }

    /// Mask of the excursion set `A` (`I⁻_L` for the below side).
    pub fn excursion_mask(&self) -> &[bool] {
        &self.excursion
    }

    /// Mask of the complement `B` (`I⁺_L` for the below side).
    pub fn rest_mask(&self) -> Vec<bool> {
        self.excursion.iter().map(|a| !a).collect()
    }

    pub fn excursion_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.excursion[i]).collect()
    }

    pub fn rest_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.excursion[i]).collect()
    }

    /// For a single cut in a 1D state space: `(a, b)` with `a` the excursion
    /// state adjacent to the cut (`L⁻` below) and `b` its neighbor outside
    /// (`L⁺ = L` when `L` is a node). `None` when either set is empty.
    pub fn cut(&self) -> Result<Option<(usize, usize)>> {
        let n = self.dim();
        let changes: Vec<usize> = (1..n).filter(|&i| self.excursion[i] != self.excursion[i - 1]).collect();
        match changes.as_slice() {
            [] => Ok(None),
            [i] => {
                if self.excursion[i - 1] {
                    Ok(Some((i - 1, *i)))
                } else {
                    Ok(Some((*i, i - 1)))
                }
            }
            _ => Err(Error::usage(
                "excursion set is not a single interval adjacent to the barrier",
            )),
        }
    }
}

/// Full-matrix building blocks `{V, U1, U2, U⁻}` at `q`.
#[derive(Clone, Debug)]
pub struct FirstPassageBlocks {
    pub v: RMat,
    pub u1: CMat,
    pub u2: CMat,
    pub u_minus: CMat,
}

fn diag_mask(mask: &[bool]) -> RMat {
    RMat::from_fn(mask.len(), mask.len(), |i, j| if i == j && mask[i] { 1.0 } else { 0.0 })
}

fn to_c(m: &RMat) -> CMat {
    m.map(Complex64::from)
}

/// The building blocks evaluated literally with full matrices.
pub fn first_passage_blocks(
    gen: &Generator,
    prob: &ParisianProblem,
    q: Complex64,
    scheme: ExpmvScheme,
) -> Result<FirstPassageBlocks> {
    check_q(q)?;
    let g = gen.to_dense();
    let a = prob.excursion_mask();
    let b = prob.rest_mask();
    let ia = diag_mask(a);
    let ib = diag_mask(&b);
    let v = expm_dense(&(&ia * &g), prob.window, scheme)? * &ia;
    let u1 = ComplexLu::new(masked_dense(&g, a, q), "U1 resolvent")?.solve_mat(&to_c(&ib))?;
    let u2 = mul_rc(&v, &u1) * (-q * prob.window).exp();
    let u_minus = ComplexLu::new(masked_dense(&g, &b, q), "U- resolvent")?.solve_mat(&to_c(&ia))?;
    Ok(FirstPassageBlocks { v, u1, u2, u_minus })
}

/// `H(q)` from the literal formula (full matrices, `O(n³)`): reference path.
pub fn parisian_matrix_literal(
    gen: &Generator,
    prob: &ParisianProblem,
    q: Complex64,
    scheme: ExpmvScheme,
) -> Result<CMat> {
    let blk = first_passage_blocks(gen, prob, q, scheme)?;
    let n = gen.dim();
    let ia = to_c(&diag_mask(prob.excursion_mask()));
    let ib = to_c(&diag_mask(&prob.rest_mask()));
    let u = &ia * (&blk.u1 - &blk.u2) + &ib * &blk.u_minus;
    let lhs = CMat::identity(n, n) - u;
    let rhs = &ia * to_c(&blk.v) * (-q * prob.window).exp();
    ComplexLu::new(lhs, "I - U")?.solve_mat(&rhs)
}

fn check_q(q: Complex64) -> Result<()> {
    if !(q.re > 0.0) || !q.im.is_finite() {
        return Err(Error::domain(format!("transform argument needs Re(q) > 0, got {q}")));
    }
    Ok(())
}

/// `H(q)` and `h(q) = H(q) e` at one `q`.
#[derive(Clone, Debug)]
pub struct ParisianTransform {
    pub q: Complex64,
    pub h: Vec<Complex64>,
    /// Materialized `H(q)` when requested.
    pub matrix: Option<CMat>,
}

/// Dense (Schur-complement) evaluation of `H(q)`; materializes the matrix.
pub fn parisian_transform_general(
    gen: &Generator,
    prob: &ParisianProblem,
    q: Complex64,
    scheme: ExpmvScheme,
) -> Result<ParisianTransform> {
    let solver = ParisianSolver::dense(gen, prob, scheme)?;
    let t = solver.at(q)?;
    Ok(ParisianTransform {
        q,
        h: t.h()?,
        matrix: Some(t.matrix()?),
    })
}

/// Birth-and-death evaluation of `h(q)`; tridiagonal generators only.
pub fn parisian_transform_bd(
    gen: &Generator,
    prob: &ParisianProblem,
    q: Complex64,
    scheme: ExpmvScheme,
) -> Result<ParisianTransform> {
    let solver = ParisianSolver::birth_death(gen, prob, scheme)?;
    Ok(ParisianTransform {
        q,
        h: solver.at(q)?.h()?,
        matrix: None,
    })
}

/// Which engine a [`ParisianSolver`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverPath {
    /// Birth-and-death when possible, dense otherwise.
    #[default]
    Auto,
    Dense,
    BirthDeath,
}

/// Precomputed, `q`-independent state of the Parisian transform.
#[derive(Debug)]
pub enum ParisianSolver {
    Dense(DenseSolver),
    BirthDeath(BdSolver),
}

#[derive(Debug)]
pub struct DenseSolver {
    n: usize,
    window: f64,
    a_idx: Vec<usize>,
    b_idx: Vec<usize>,
    g_aa: RMat,
    g_ab: RMat,
    g_ba: RMat,
    g_bb: RMat,
    e_aa: RMat,
    ve_a: Vec<f64>,
}

#[derive(Debug)]
pub struct BdSolver {
    n: usize,
    window: f64,
    g: Tridiag<f64>,
    mask_a: Vec<bool>,
    mask_b: Vec<bool>,
    cut: Option<(usize, usize)>,
    expm: TriExpmv,
    ve: Vec<f64>,
}

/// Threshold below which `|1 - u⁻u⁺|` is reported.
pub const DENOMINATOR_WARN: f64 = 1e-10;

impl ParisianSolver {
    pub fn new(gen: &Generator, prob: &ParisianProblem, scheme: ExpmvScheme, path: SolverPath) -> Result<Self> {
        match path {
            SolverPath::Dense => Self::dense(gen, prob, scheme),
            SolverPath::BirthDeath => Self::birth_death(gen, prob, scheme),
            SolverPath::Auto => {
                if gen.tridiag().is_some() && prob.cut().is_ok() {
                    Self::birth_death(gen, prob, scheme)
                } else {
                    Self::dense(gen, prob, scheme)
                }
            }
        }
    }

    pub fn auto(gen: &Generator, prob: &ParisianProblem) -> Result<Self> {
        Self::new(gen, prob, ExpmvScheme::default(), SolverPath::Auto)
    }

    pub fn dense(gen: &Generator, prob: &ParisianProblem, scheme: ExpmvScheme) -> Result<Self> {
        check_dims(gen, prob)?;
        let g = gen.to_dense();
        let a_idx = prob.excursion_indices();
        let b_idx = prob.rest_indices();
        let g_aa = submatrix(&g, &a_idx, &a_idx);
        let e_aa = expm_dense(&g_aa, prob.window, scheme)?;
        let ve_a = e_aa.row_iter().map(|r| r.sum()).collect();
        Ok(ParisianSolver::Dense(DenseSolver {
            n: gen.dim(),
            window: prob.window,
            g_ab: submatrix(&g, &a_idx, &b_idx),
            g_ba: submatrix(&g, &b_idx, &a_idx),
            g_bb: submatrix(&g, &b_idx, &b_idx),
            g_aa,
            e_aa,
            ve_a,
            a_idx,
            b_idx,
        }))
    }

    pub fn birth_death(gen: &Generator, prob: &ParisianProblem, scheme: ExpmvScheme) -> Result<Self> {
        check_dims(gen, prob)?;
        let g = match gen.storage() {
            Storage::Tri(t) => t.clone(),
            Storage::Dense(_) => return Err(Error::usage("the birth-and-death path needs a tridiagonal generator")),
        };
        let cut = prob.cut()?;
        let mask_a = prob.excursion_mask().to_vec();
        let mask_b = prob.rest_mask();
        let ma_g = mask_rows_tridiag(&g, &mask_a);
        let expm = TriExpmv::new(&ma_g, prob.window, scheme)?;
        let ea: Vec<f64> = mask_a.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let ve = expm.apply(&ea);
        Ok(ParisianSolver::BirthDeath(BdSolver {
            n: gen.dim(),
            window: prob.window,
            g,
            mask_a,
            mask_b,
            cut,
            expm,
            ve,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            ParisianSolver::Dense(s) => s.n,
            ParisianSolver::BirthDeath(s) => s.n,
        }
    }

    pub fn path(&self) -> SolverPath {
        match self {
            ParisianSolver::Dense(_) => SolverPath::Dense,
            ParisianSolver::BirthDeath(_) => SolverPath::BirthDeath,
        }
    }

    /// Factors everything that depends on `q`.
    pub fn at(&self, q: Complex64) -> Result<Transform<'_>> {
        check_q(q)?;
        let inner = match self {
            ParisianSolver::Dense(s) => Inner::Dense(s.blocks(q)?),
            ParisianSolver::BirthDeath(s) => Inner::Bd(s.blocks(q)?),
        };
        Ok(Transform {
            solver: self,
            q,
            disc: (-q * self.window()).exp(),
            inner,
        })
    }

    pub fn window(&self) -> f64 {
        match self {
            ParisianSolver::Dense(s) => s.window,
            ParisianSolver::BirthDeath(s) => s.window,
        }
    }

    /// `H(q) g`.
    pub fn apply(&self, q: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
        self.at(q)?.apply(g)
    }

    /// `h(q) = H(q) e`.
    pub fn h(&self, q: Complex64) -> Result<Vec<Complex64>> {
        self.at(q)?.h()
    }

    /// `e^{qD} H(q) g`, the transform of the delayed law of `τ - D ≥ 0`.
    pub fn apply_delayed(&self, q: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut t = self.at(q)?;
        t.disc = Complex64::from(1.0);
        t.apply(g)
    }

    /// `e^{qD} h(q)`.
    pub fn h_delayed(&self, q: Complex64) -> Result<Vec<Complex64>> {
        let mut t = self.at(q)?;
        t.disc = Complex64::from(1.0);
        t.h()
    }

    /// `h(q)` at real `q`.
    pub fn h_real(&self, q: f64) -> Result<Vec<f64>> {
        Ok(self.h(Complex64::new(q, 0.0))?.iter().map(|z| z.re).collect())
    }
}

fn check_dims(gen: &Generator, prob: &ParisianProblem) -> Result<()> {
    if gen.dim() != prob.dim() {
        return Err(Error::usage(format!(
            "problem mask has {} states but the generator has {}",
            prob.dim(),
            gen.dim()
        )));
    }
    Ok(())
}

struct DenseBlocks {
    /// `P = U1_AB - e^{-qD} E_AA U1_AB`.
    p: Option<CMat>,
    /// `Q = (q - G_BB)^{-1} G_BA`.
    qm: Option<CMat>,
    /// `I - P Q`.
    s: Option<ComplexLu>,
}

impl DenseSolver {
    fn blocks(&self, q: Complex64) -> Result<DenseBlocks> {
        if self.a_idx.is_empty() || self.b_idx.is_empty() {
            return Ok(DenseBlocks {
                p: None,
                qm: None,
                s: None,
            });
        }
        let disc = (-q * self.window).exp();
        let shifted = |m: &RMat| {
            let k = m.nrows();
            CMat::from_fn(k, k, |i, j| {
                let v = Complex64::from(-m[(i, j)]);
                if i == j {
                    v + q
                } else {
                    v
                }
            })
        };
        let lu_a = ComplexLu::new(shifted(&self.g_aa), "q - G_AA")?;
        let u1 = lu_a.solve_mat(&to_c(&self.g_ab))?;
        let p = &u1 - mul_rc(&self.e_aa, &u1) * disc;
        let lu_b = ComplexLu::new(shifted(&self.g_bb), "q - G_BB")?;
        let qm = lu_b.solve_mat(&to_c(&self.g_ba))?;
        let na = self.a_idx.len();
        let s = CMat::identity(na, na) - mul_cc(&p, &qm);
        let s = ComplexLu::new(s, "I - U")?;
        Ok(DenseBlocks {
            p: Some(p),
            qm: Some(qm),
            s: Some(s),
        })
    }
}

struct BdBlocks {
    /// `I_A u⁺` with `u⁺ = u1 - e^{-qD} exp(I_A G D) I_A u1`.
    u_plus: Vec<Complex64>,
    /// `I_B u⁻`.
    u_minus: Vec<Complex64>,
    um: Complex64,
    den: Complex64,
}

impl BdSolver {
    fn blocks(&self, q: Complex64) -> Result<Option<BdBlocks>> {
        let Some((a, b)) = self.cut else {
            return Ok(None);
        };
        let disc = (-q * self.window).exp();
        let mut e_b = vec![Complex64::from(0.0); self.n];
        e_b[b] = Complex64::from(1.0);
        let u1 = masked_tridiag(&self.g, &self.mask_a, q)
            .factor()
            .map_err(|e| Error::numerical(format!("U1 resolvent at q = {q}: {e}")))?
            .solve(&e_b);
        let mut ma_u1 = u1.clone();
        for (v, &m) in ma_u1.iter_mut().zip(&self.mask_a) {
            if !m {
                *v = Complex64::from(0.0);
            }
        }
        let vu1 = self.expm.apply(&ma_u1);
        let u_plus: Vec<Complex64> = (0..self.n)
            .map(|i| {
                if self.mask_a[i] {
                    u1[i] - vu1[i] * disc
                } else {
                    Complex64::from(0.0)
                }
            })
            .collect();
        let mut e_a = vec![Complex64::from(0.0); self.n];
        e_a[a] = Complex64::from(1.0);
        let um_full = masked_tridiag(&self.g, &self.mask_b, q)
            .factor()
            .map_err(|e| Error::numerical(format!("U- resolvent at q = {q}: {e}")))?
            .solve(&e_a);
        let u_minus: Vec<Complex64> = (0..self.n)
            .map(|i| {
                if self.mask_b[i] {
                    um_full[i]
                } else {
                    Complex64::from(0.0)
                }
            })
            .collect();
        let um = u_minus[b];
        let up = u_plus[a];
        let den = Complex64::from(1.0) - um * up;
        if den.norm() < DENOMINATOR_WARN {
            log::warn!("birth-and-death denominator |1 - u⁻u⁺| = {:.3e} at q = {q}", den.norm());
            if den.norm() == 0.0 {
                return Err(Error::numerical(format!("1 - u⁻u⁺ vanishes at q = {q}")));
            }
        }
        Ok(Some(BdBlocks {
            u_plus,
            u_minus,
            um,
            den,
        }))
    }
}

enum Inner {
    Dense(DenseBlocks),
    Bd(Option<BdBlocks>),
}

/// The transform at a fixed `q`, ready for any number of right-hand sides.
pub struct Transform<'s> {
    solver: &'s ParisianSolver,
    pub q: Complex64,
    disc: Complex64,
    inner: Inner,
}

impl Transform<'_> {
    /// `|1 - u⁻u⁺|` of the birth-and-death path (`None` for the dense path or
    /// a degenerate cut).
    pub fn denominator(&self) -> Option<f64> {
        match &self.inner {
            Inner::Bd(Some(b)) => Some(b.den.norm()),
            _ => None,
        }
    }

    /// `H(q) g`.
    pub fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.solver.dim() {
            return Err(Error::usage(format!(
                "vector has {} entries, expected {}",
                g.len(),
                self.solver.dim()
            )));
        }
        match (self.solver, &self.inner) {
            (ParisianSolver::Dense(s), Inner::Dense(blk)) => {
                let g_a: Vec<Complex64> = s.a_idx.iter().map(|&i| g[i]).collect();
                let r_a: Vec<Complex64> = mul_rc_vec(&s.e_aa, &g_a).iter().map(|v| v * self.disc).collect();
                Ok(self.dense_finish(s, blk, r_a))
            }
            (ParisianSolver::BirthDeath(s), Inner::Bd(blk)) => {
                let ga: Vec<Complex64> = (0..s.n)
                    .map(|i| if s.mask_a[i] { g[i] } else { Complex64::from(0.0) })
                    .collect();
                let vg = s.expm.apply(&ga);
                Ok(self.bd_finish(s, blk.as_ref(), &vg))
            }
            _ => unreachable!("transform built for a different solver"),
        }
    }

    /// `h(q) = H(q) e`, reusing the cached `V e`.
    pub fn h(&self) -> Result<Vec<Complex64>> {
        match (self.solver, &self.inner) {
            (ParisianSolver::Dense(s), Inner::Dense(blk)) => {
                let r_a: Vec<Complex64> = s.ve_a.iter().map(|&v| self.disc * v).collect();
                Ok(self.dense_finish(s, blk, r_a))
            }
            (ParisianSolver::BirthDeath(s), Inner::Bd(blk)) => {
                let vg: Vec<Complex64> = s.ve.iter().map(|&v| Complex64::from(v)).collect();
                Ok(self.bd_finish(s, blk.as_ref(), &vg))
            }
            _ => unreachable!("transform built for a different solver"),
        }
    }

    fn dense_finish(&self, s: &DenseSolver, blk: &DenseBlocks, r_a: Vec<Complex64>) -> Vec<Complex64> {
        let mut out = vec![Complex64::from(0.0); s.n];
        let (z_a, z_b) = match (&blk.s, &blk.qm) {
            (Some(lu), Some(qm)) => {
                let z_a = lu.solve_vec(&r_a).expect("factored system");
                let z_b = qm * nalgebra::DVector::from_column_slice(&z_a);
                (z_a, z_b.as_slice().to_vec())
            }
            _ => (r_a, vec![Complex64::from(0.0); s.b_idx.len()]),
        };
        for (k, &i) in s.a_idx.iter().enumerate() {
            out[i] = z_a[k];
        }
        for (k, &i) in s.b_idx.iter().enumerate() {
            out[i] = z_b[k];
        }
        let _ = &blk.p;
        out
    }

    fn bd_finish(&self, s: &BdSolver, blk: Option<&BdBlocks>, vg: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = (0..s.n)
            .map(|i| {
                if s.mask_a[i] {
                    vg[i] * self.disc
                } else {
                    Complex64::from(0.0)
                }
            })
            .collect();
        if let (Some(b), Some((a, _))) = (blk, s.cut) {
            let hm = self.disc * vg[a] / b.den;
            let hp = b.um * hm;
            for (i, o) in out.iter_mut().enumerate() {
                *o += if s.mask_a[i] {
                    b.u_plus[i] * hp
                } else {
                    b.u_minus[i] * hm
                };
            }
        }
        out
    }

    /// Materializes `H(q)`.
    pub fn matrix(&self) -> Result<CMat> {
        let n = self.solver.dim();
        match (self.solver, &self.inner) {
            (ParisianSolver::Dense(s), Inner::Dense(blk)) => {
                let mut h = CMat::zeros(n, n);
                let rhs = to_c(&s.e_aa) * self.disc;
                let (z_a, z_b) = match (&blk.s, &blk.qm) {
                    (Some(lu), Some(qm)) => {
                        let z_a = lu.solve_mat(&rhs)?;
                        let z_b = mul_cc(qm, &z_a);
                        (z_a, z_b)
                    }
                    _ => (rhs, CMat::zeros(s.b_idx.len(), s.a_idx.len())),
                };
                for (ca, &j) in s.a_idx.iter().enumerate() {
                    for (ra, &i) in s.a_idx.iter().enumerate() {
                        h[(i, j)] = z_a[(ra, ca)];
                    }
                    for (rb, &i) in s.b_idx.iter().enumerate() {
                        h[(i, j)] = z_b[(rb, ca)];
                    }
                }
                Ok(h)
            }
            _ => {
                let mut h = CMat::zeros(n, n);
                let mut e = vec![Complex64::from(0.0); n];
                for j in 0..n {
                    e[j] = Complex64::from(1.0);
                    let col = self.apply(&e)?;
                    e[j] = Complex64::from(0.0);
                    for i in 0..n {
                        h[(i, j)] = col[i];
                    }
                }
                Ok(h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::DriftScheme;
    use crate::grid::Grid;
    use crate::model::{build_preset, default_params, Preset};

    fn bm(n: usize) -> (Grid, Generator) {
        let m = build_preset(Preset::Bm, &default_params(Preset::Bm))
            .unwrap()
            .single()
            .unwrap();
        let grid = Grid::barrier_on_grid(-4.0, 4.0, 0.0, n).unwrap();
        let g = Generator::build(&m, &grid, DriftScheme::Central).unwrap();
        (grid, g)
    }

    #[test]
    fn all_below_gives_deterministic_time() {
        let (grid, g) = bm(40);
        let p = ParisianProblem::new(Side::Below, 10.0, 0.5, grid.nodes()).unwrap();
        for path in [SolverPath::Dense, SolverPath::BirthDeath] {
            let s = ParisianSolver::new(&g, &p, ExpmvScheme::default(), path).unwrap();
            let q = Complex64::new(2.0, 1.0);
            let h = s.h(q).unwrap();
            let expect = (-q * 0.5).exp();
            for v in h {
                assert!((v - expect).norm() < 1e-12, "{path:?}");
            }
        }
    }

    #[test]
    fn nothing_below_gives_zero() {
        let (grid, g) = bm(40);
        let p = ParisianProblem::new(Side::Below, -10.0, 0.5, grid.nodes()).unwrap();
        let s = ParisianSolver::birth_death(&g, &p, ExpmvScheme::default()).unwrap();
        assert!(s.h_real(1.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn blocks_degenerate_masks() {
        let (grid, g) = bm(20);
        let p = ParisianProblem::new(Side::Below, 10.0, 0.3, grid.nodes()).unwrap();
        let b = first_passage_blocks(&g, &p, Complex64::new(1.0, 0.0), ExpmvScheme::default()).unwrap();
        assert!(b.u1.norm() == 0.0);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((b.u_minus[(i, j)] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_window_blocks_reduce_to_masks() {
        let (grid, g) = bm(20);
        let mut p = ParisianProblem::new(Side::Below, 0.0, 1.0, grid.nodes()).unwrap();
        p.window = 0.0;
        let b = first_passage_blocks(&g, &p, Complex64::new(1.0, 0.0), ExpmvScheme::default()).unwrap();
        let ia = diag_mask(p.excursion_mask());
        assert!((&b.v - &ia).norm() < 1e-15);
        assert!((&b.u2 - to_c(&ia) * &b.u1).norm() < 1e-14);
    }

    #[test]
    fn schur_matches_literal_and_bd() {
        let (grid, g) = bm(60);
        for side in [Side::Below, Side::Above] {
            let p = ParisianProblem::new(side, 0.0, 0.25, grid.nodes()).unwrap();
            let q = Complex64::new(7.5, 3.25);
            let lit = parisian_matrix_literal(&g, &p, q, ExpmvScheme::default()).unwrap();
            let dense = ParisianSolver::dense(&g, &p, ExpmvScheme::default()).unwrap();
            let bd = ParisianSolver::birth_death(&g, &p, ExpmvScheme::default()).unwrap();
            let hd = dense.at(q).unwrap().matrix().unwrap();
            assert!((&hd - &lit).norm() < 1e-10 * lit.norm().max(1.0));
            let hb = bd.at(q).unwrap().matrix().unwrap();
            assert!((&hb - &lit).norm() < 1e-10 * lit.norm().max(1.0));
            // columns outside the excursion set vanish
            for j in p.rest_indices() {
                assert!(hd.column(j).iter().all(|v| v.norm() == 0.0));
            }
        }
    }

    #[test]
    fn bd_rejects_dense_generator() {
        let (grid, g) = bm(20);
        let p = ParisianProblem::new(Side::Below, 0.0, 0.25, grid.nodes()).unwrap();
        assert!(matches!(
            ParisianSolver::birth_death(&g.densified(), &p, ExpmvScheme::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn bd_identity_at_the_cut() {
        // h(q, L⁻) = e^{-qD} (V e)(L⁻) / (1 - u⁻ u⁺)
        let (grid, g) = bm(80);
        let p = ParisianProblem::new(Side::Below, 0.0, 1.0, grid.nodes()).unwrap();
        let s = ParisianSolver::birth_death(&g, &p, ExpmvScheme::default()).unwrap();
        let q = Complex64::new(1.3, 0.7);
        let t = s.at(q).unwrap();
        let h = t.h().unwrap();
        let (a, _) = p.cut().unwrap().unwrap();
        let ParisianSolver::BirthDeath(bd) = &s else {
            unreachable!()
        };
        let den = t.denominator().unwrap();
        let expect = (-q).exp() * bd.ve[a];
        assert!(((h[a] * den).norm() - expect.norm()).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_q_and_window() {
        let (grid, g) = bm(20);
        assert!(ParisianProblem::new(Side::Below, 0.0, 0.0, grid.nodes()).is_err());
        let p = ParisianProblem::new(Side::Below, 0.0, 1.0, grid.nodes()).unwrap();
        let s = ParisianSolver::auto(&g, &p).unwrap();
        assert!(s.h(Complex64::new(0.0, 1.0)).is_err());
    }
}
