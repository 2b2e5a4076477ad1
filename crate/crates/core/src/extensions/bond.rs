//! Parisian bonds on a short-rate chain:
//! `P(T, x) = E_x[e^{-∫_0^τ R dt} f(R_τ) 1{τ < T}]`, `τ` the first time an
//! excursion strictly above `L` lasts `D`.
//!
//! With `X = G - diag(x)`, `P = {x > L}`, `N = {x ≤ L}` and `E = exp(I_P X D)`:
//!
//! ```text
//! v   = e^{-qD} E I_P f
//! U⁻  = U1⁻ - e^{-qD} E I_P U1⁻,  U1⁻ = (q I_P - I_P X + I_N)^{-1} I_N
//! U⁺  = (q I_N - I_N X + I_P)^{-1} I_P
//! h   = (I - I_P U⁻ I_N - I_N U⁺ I_P)^{-1} v,     P̃(q) = h(q) / q
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::linalg::dense::{mul_rc, CMat, ComplexLu, RMat};
use crate::linalg::expmv::{expm_dense, ExpmvScheme};
use crate::linalg::masked::masked_dense;
use crate::pricing::{delayed_grid, Inversion};

fn diag(mask: &[bool]) -> CMat {
    let n = mask.len();
    CMat::from_fn(n, n, |i, j| Complex64::from(if i == j && mask[i] { 1.0 } else { 0.0 }))
}

/// Precomputed bond system.
#[derive(Debug)]
pub struct ParisianBond {
    x: RMat,
    window: f64,
    above: Vec<bool>,
    below: Vec<bool>,
    /// `E I_P`.
    e: RMat,
    /// `E I_P f`.
    ef: Vec<f64>,
    min_rate: f64,
}

impl ParisianBond {
    /// The chain is the short rate itself: state `i` pays `nodes[i]`.
    pub fn new(
        gen: &Generator,
        nodes: &[f64],
        level: f64,
        window: f64,
        payoff: &[f64],
        scheme: ExpmvScheme,
    ) -> Result<Self> {
        Self::with_rates(gen, nodes, nodes, level, window, payoff, scheme)
    }

    /// Excursions are measured on `nodes`, discounting uses `rates`.
    pub fn with_rates(
        gen: &Generator,
        nodes: &[f64],
        rates: &[f64],
        level: f64,
        window: f64,
        payoff: &[f64],
        scheme: ExpmvScheme,
    ) -> Result<Self> {
        let n = gen.dim();
        if nodes.len() != n || rates.len() != n || payoff.len() != n {
            return Err(Error::usage("nodes, rates and payoff must have one entry per state"));
        }
        if !(window > 0.0) {
            return Err(Error::config("parisian.D", "window must be positive"));
        }
        let mut x = gen.to_dense();
        for (i, r) in rates.iter().enumerate() {
            x[(i, i)] -= r;
        }
        let above: Vec<bool> = nodes.iter().map(|&x| x > level).collect();
        let below: Vec<bool> = above.iter().map(|a| !a).collect();
        let ip = RMat::from_fn(n, n, |i, j| if i == j && above[i] { 1.0 } else { 0.0 });
        let e = expm_dense(&(&ip * &x), window, scheme)? * &ip;
        let ef = (&e * nalgebra::DVector::from_column_slice(payoff)).as_slice().to_vec();
        Ok(ParisianBond {
            x,
            window,
            above,
            below,
            e,
            ef,
            min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }

    /// `h(q, ·)`.
    pub fn h(&self, q: Complex64) -> Result<Vec<Complex64>> {
        let disc = (-q * self.window).exp();
        Ok(self.h_delayed(q)?.into_iter().map(|v| v * disc).collect())
    }

    /// `e^{qD} h(q, ·)`.
    pub fn h_delayed(&self, q: Complex64) -> Result<Vec<Complex64>> {
        if !(q.re + self.min_rate > 0.0) {
            return Err(Error::domain(format!("Re(q) + min rate must be positive at q = {q}")));
        }
        let n = self.x.nrows();
        let disc = (-q * self.window).exp();
        let u1 =
            ComplexLu::new(masked_dense(&self.x, &self.above, q), "U1- resolvent")?.solve_mat(&diag(&self.below))?;
        let um = &u1 - mul_rc(&self.e, &u1) * disc;
        let up =
            ComplexLu::new(masked_dense(&self.x, &self.below, q), "U+ resolvent")?.solve_mat(&diag(&self.above))?;
        let m = CMat::identity(n, n)
            - diag(&self.above) * um * diag(&self.below)
            - diag(&self.below) * up * diag(&self.above);
        let v: Vec<Complex64> = self.ef.iter().map(|&a| Complex64::from(a)).collect();
        ComplexLu::new(m, "bond system")?.solve_vec(&v)
    }
}

/// `P(T, x)` for every state.
pub fn parisian_bond_prices(bond: &ParisianBond, maturity: f64, inv: &Inversion) -> Result<Vec<f64>> {
    let Some(grid) = delayed_grid(inv, maturity, bond.window)? else {
        return Ok(vec![0.0; bond.x.nrows()]);
    };
    grid.invert_vec(|q| Ok(bond.h_delayed(q)?.into_iter().map(|v| v / q).collect()))
}
