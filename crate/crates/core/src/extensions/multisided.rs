//! Multi-sided Parisian times `τ = min_A τ_A^D` over disjoint sets `A`.
//!
//! With `B = ∪A`:
//!
//! ```text
//! H(q) = e^{-qD} (I - Σ I_A U⁻_A(q) - (I - I_B) U⁺(q))^{-1} Σ I_A V_A
//! U⁻_A = U⁻_{1,A} - e^{-qD} V_A U⁻_{1,A},  V_A = exp(I_A G D) I_A
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::linalg::dense::{mul_rc, mul_rc_vec, CMat, ComplexLu, RMat};
use crate::linalg::expmv::{expm_dense, ExpmvScheme};
use crate::linalg::masked::masked_dense;
use crate::pricing::{delayed_grid, european_transform, Inversion};

/// A family of disjoint state sets given by masks.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFamily {
    sets: Vec<Vec<bool>>,
}

impl SetFamily {
    pub fn from_masks(sets: Vec<Vec<bool>>) -> Result<Self> {
        let Some(first) = sets.first() else {
            return Err(Error::config("multisided.sets", "at least one set is required"));
        };
        let n = first.len();
        if sets.iter().any(|s| s.len() != n) {
            return Err(Error::usage("set masks must have equal length"));
        }
        for i in 0..n {
            if sets.iter().filter(|s| s[i]).count() > 1 {
                return Err(Error::config("multisided.sets", format!("sets overlap at state {i}")));
            }
        }
        Ok(SetFamily { sets })
    }

    /// Open intervals `(lo, hi)`; either end may be infinite.
    pub fn from_intervals(nodes: &[f64], intervals: &[(f64, f64)]) -> Result<Self> {
        for &(lo, hi) in intervals {
            if !(lo < hi) {
                return Err(Error::config("multisided.sets", format!("empty interval ({lo}, {hi})")));
            }
        }
        Self::from_masks(
            intervals
                .iter()
                .map(|&(lo, hi)| nodes.iter().map(|&x| x > lo && x < hi).collect())
                .collect(),
        )
    }

    pub fn sets(&self) -> &[Vec<bool>] {
        &self.sets
    }

    /// `I_B` as a mask.
    pub fn union(&self) -> Vec<bool> {
        (0..self.sets[0].len())
            .map(|i| self.sets.iter().any(|s| s[i]))
            .collect()
    }
}

fn diag(mask: &[bool]) -> CMat {
    let n = mask.len();
    CMat::from_fn(n, n, |i, j| Complex64::from(if i == j && mask[i] { 1.0 } else { 0.0 }))
}

/// Precomputed `q`-independent parts.
#[derive(Debug)]
pub struct MultiSided {
    g: RMat,
    family: SetFamily,
    window: f64,
    /// `V_A = exp(I_A G D) I_A`.
    v: Vec<RMat>,
    /// `Σ I_A V_A`.
    v_sum: RMat,
}

impl MultiSided {
    pub fn new(gen: &Generator, family: SetFamily, window: f64, scheme: ExpmvScheme) -> Result<Self> {
        if !(window > 0.0) {
            return Err(Error::config("parisian.D", "window must be positive"));
        }
        let g = gen.to_dense();
        let n = g.nrows();
        if family.sets[0].len() != n {
            return Err(Error::usage("set masks do not match the generator"));
        }
        let mut v = Vec::new();
        let mut v_sum = RMat::zeros(n, n);
        for a in &family.sets {
            let ia = RMat::from_fn(n, n, |i, j| if i == j && a[i] { 1.0 } else { 0.0 });
            let va = expm_dense(&(&ia * &g), window, scheme)? * &ia;
            v_sum += &ia * &va;
            v.push(va);
        }
        Ok(MultiSided {
            g,
            family,
            window,
            v,
            v_sum,
        })
    }

    fn system(&self, q: Complex64) -> Result<ComplexLu> {
        if !(q.re > 0.0) {
            return Err(Error::domain(format!("transform argument needs Re(q) > 0, got {q}")));
        }
        let n = self.g.nrows();
        let disc = (-q * self.window).exp();
        let mut m = CMat::identity(n, n);
        for (a, va) in self.family.sets.iter().zip(&self.v) {
            let out: Vec<bool> = a.iter().map(|x| !x).collect();
            let u1 = ComplexLu::new(masked_dense(&self.g, a, q), "U1_A resolvent")?.solve_mat(&diag(&out))?;
            let u = &u1 - mul_rc(va, &u1) * disc;
            m -= diag(a) * u;
        }
        let b = self.family.union();
        let outside: Vec<bool> = b.iter().map(|x| !x).collect();
        let up = ComplexLu::new(masked_dense(&self.g, &outside, q), "U+ resolvent")?.solve_mat(&diag(&b))?;
        m -= diag(&outside) * up;
        ComplexLu::new(m, "multi-sided I - U")
    }

    /// `H(q)`.
    pub fn matrix(&self, q: Complex64) -> Result<CMat> {
        let rhs = self.v_sum.map(Complex64::from) * (-q * self.window).exp();
        self.system(q)?.solve_mat(&rhs)
    }

    /// `H(q) g`.
    pub fn apply(&self, q: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs: Vec<Complex64> = mul_rc_vec(&self.v_sum, g)
            .into_iter()
            .map(|v| v * (-q * self.window).exp())
            .collect();
        self.system(q)?.solve_vec(&rhs)
    }

    /// `h(q) = H(q) e`.
    pub fn h(&self, q: Complex64) -> Result<Vec<Complex64>> {
        self.apply(q, &vec![Complex64::from(1.0); self.g.nrows()])
    }

    /// `e^{qD} h(q)`.
    pub fn h_delayed(&self, q: Complex64) -> Result<Vec<Complex64>> {
        let rhs = mul_rc_vec(&self.v_sum, &vec![Complex64::from(1.0); self.g.nrows()]);
        self.system(q)?.solve_vec(&rhs)
    }
}

/// `H(q)` for a set family.
pub fn multi_sided_transform(
    gen: &Generator,
    family: &SetFamily,
    window: f64,
    q: Complex64,
    scheme: ExpmvScheme,
) -> Result<CMat> {
    MultiSided::new(gen, family.clone(), window, scheme)?.matrix(q)
}

/// `P_x[τ ≤ t]` for every state.
pub fn multi_sided_cdf(ms: &MultiSided, t: f64, inv: &Inversion) -> Result<Vec<f64>> {
    match delayed_grid(inv, t, ms.window)? {
        None => Ok(vec![0.0; ms.g.nrows()]),
        Some(grid) => grid.invert_vec(|q| Ok(ms.h_delayed(q)?.into_iter().map(|v| v / q).collect())),
    }
}

/// Discounted `e^{-rT} E_x[1{τ ≤ T} f(Y_T)]` for every state.
pub fn multi_sided_prices(
    gen: &Generator,
    ms: &MultiSided,
    payoff: &[f64],
    maturity: f64,
    rate: f64,
    inv: &Inversion,
) -> Result<Vec<f64>> {
    let u = inv.grid(maturity)?.invert_vec(|q| {
        let w = european_transform(gen, payoff, q)?;
        ms.apply(q, &w)
    })?;
    let disc = (-rate * maturity).exp();
    Ok(u.into_iter().map(|v| v * disc).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::DriftScheme;
    use crate::grid::Grid;
    use crate::model::{build_preset, default_params, Preset};
    use crate::parisian::{parisian_matrix_literal, ParisianProblem, Side};

    fn bm(n: usize) -> (Grid, Generator) {
        let m = build_preset(Preset::Bm, &default_params(Preset::Bm))
            .unwrap()
            .single()
            .unwrap();
        let grid = Grid::uniform(-3.0, 3.0, n).unwrap();
        let g = Generator::build(&m, &grid, DriftScheme::Central).unwrap();
        (grid, g)
    }

    #[test]
    fn single_set_reduces_to_one_sided() {
        let (grid, g) = bm(40);
        let fam = SetFamily::from_intervals(grid.nodes(), &[(f64::NEG_INFINITY, 0.1)]).unwrap();
        let q = Complex64::new(3.0, 2.0);
        let h = multi_sided_transform(&g, &fam, 0.2, q, ExpmvScheme::default()).unwrap();
        let p = ParisianProblem::new(Side::Below, 0.1, 0.2, grid.nodes()).unwrap();
        let lit = parisian_matrix_literal(&g, &p, q, ExpmvScheme::default()).unwrap();
        assert!((h - &lit).norm() < 1e-10 * lit.norm());
    }

    #[test]
    fn double_barrier_is_symmetric_and_bounded() {
        let (grid, g) = bm(40);
        let fam = SetFamily::from_intervals(grid.nodes(), &[(f64::NEG_INFINITY, -0.5), (0.5, f64::INFINITY)]).unwrap();
        let ms = MultiSided::new(&g, fam, 0.2, ExpmvScheme::default()).unwrap();
        for q in [0.3, 1.0, 5.0] {
            let h = ms.h(Complex64::new(q, 0.0)).unwrap();
            let n = h.len();
            for i in 0..n {
                assert!(h[i].re >= -1e-12 && h[i].re <= 1.0 + 1e-12);
                assert!((h[i] - h[n - 1 - i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn overlapping_sets_rejected() {
        let nodes = [0.0, 1.0, 2.0, 3.0];
        assert!(SetFamily::from_intervals(&nodes, &[(-1.0, 2.5), (1.5, 4.0)]).is_err());
    }
}
