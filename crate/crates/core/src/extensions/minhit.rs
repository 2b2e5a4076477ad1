//! MinParisianHit: the earlier of an excursion above `L` lasting `D` and the
//! first passage to `x ≥ B`, with `L < B`.
//!
//! Excursions are timed on `C = (L, B)`; `x ≤ L` waits for the first entry into
//! `(L, ∞)` and `x ≥ B` has triggered. Regenerating at those events:
//!
//! ```text
//! K  = K1 - e^{-qD} W K1,   K1 = (q I_C - I_C G + I_{C^c})^{-1} I_{C^c}
//! W  = exp(I_C G D) I_C
//! Ū  = (q I_≤L - I_≤L G + I_>L)^{-1} I_>L
//! H1 = (I - I_C K - I_≤L Ū)^{-1} (I_≥B + e^{-qD} I_C W)
//! ```
//!
//! `K[x, z]` is the discounted law of the exit state from `C` before `D`; an
//! exit to `z ≥ B` triggers (row `z` of `H1` is `e_z`), an exit to `z ≤ L`
//! restarts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::linalg::dense::{mul_rc, mul_rc_vec, CMat, ComplexLu, RMat};
use crate::linalg::expmv::{expm_dense, ExpmvScheme};
use crate::linalg::masked::masked_dense;
use crate::pricing::{european_transform, Inversion};

fn diag(mask: &[bool]) -> CMat {
    let n = mask.len();
    CMat::from_fn(n, n, |i, j| Complex64::from(if i == j && mask[i] { 1.0 } else { 0.0 }))
}

/// Precomputed MinParisianHit system.
#[derive(Debug)]
pub struct MinHit {
    g: RMat,
    window: f64,
    mid: Vec<bool>,
    low: Vec<bool>,
    high: Vec<bool>,
    /// `W = exp(I_C G D) I_C`.
    w: RMat,
}

impl MinHit {
    pub fn new(gen: &Generator, nodes: &[f64], level: f64, window: f64, cap: f64, scheme: ExpmvScheme) -> Result<Self> {
        if !(level < cap) {
            return Err(Error::config("minhit.B", format!("B = {cap} must exceed L = {level}")));
        }
        if !(window > 0.0) {
            return Err(Error::config("parisian.D", "window must be positive"));
        }
        if nodes.len() != gen.dim() {
            return Err(Error::usage("node count does not match the generator"));
        }
        let g = gen.to_dense();
        let mid: Vec<bool> = nodes.iter().map(|&x| x > level && x < cap).collect();
        let low: Vec<bool> = nodes.iter().map(|&x| x <= level).collect();
        let high: Vec<bool> = nodes.iter().map(|&x| x >= cap).collect();
        let n = nodes.len();
        let ic = RMat::from_fn(n, n, |i, j| if i == j && mid[i] { 1.0 } else { 0.0 });
        let w = expm_dense(&(&ic * &g), window, scheme)? * &ic;
        Ok(MinHit {
            g,
            window,
            mid,
            low,
            high,
            w,
        })
    }

    fn system(&self, q: Complex64) -> Result<ComplexLu> {
        if !(q.re > 0.0) {
            return Err(Error::domain(format!("transform argument needs Re(q) > 0, got {q}")));
        }
        let n = self.g.nrows();
        let disc = (-q * self.window).exp();
        let not_mid: Vec<bool> = self.mid.iter().map(|x| !x).collect();
        let k1 = ComplexLu::new(masked_dense(&self.g, &self.mid, q), "exit resolvent")?.solve_mat(&diag(&not_mid))?;
        let k = &k1 - mul_rc(&self.w, &k1) * disc;
        let above: Vec<bool> = self.low.iter().map(|x| !x).collect();
        let ubar = ComplexLu::new(masked_dense(&self.g, &self.low, q), "entry resolvent")?.solve_mat(&diag(&above))?;
        let m = CMat::identity(n, n) - diag(&self.mid) * k - diag(&self.low) * ubar;
        ComplexLu::new(m, "MinParisianHit system")
    }

    fn rhs_apply(&self, q: Complex64, g: &[Complex64]) -> Vec<Complex64> {
        let disc = (-q * self.window).exp();
        let wg = mul_rc_vec(&self.w, g);
        (0..g.len())
            .map(|i| {
                let mut v = Complex64::from(0.0);
                if self.high[i] {
                    v += g[i];
                }
                if self.mid[i] {
                    v += disc * wg[i];
                }
                v
            })
            .collect()
    }

    /// `H1(q) g`.
    pub fn apply(&self, q: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = self.rhs_apply(q, g);
        self.system(q)?.solve_vec(&rhs)
    }

    /// `H1(q)` materialized.
    pub fn matrix(&self, q: Complex64) -> Result<CMat> {
        let disc = (-q * self.window).exp();
        let rhs = diag(&self.high) + diag(&self.mid) * self.w.map(Complex64::from) * disc;
        self.system(q)?.solve_mat(&rhs)
    }

    pub fn h(&self, q: Complex64) -> Result<Vec<Complex64>> {
        self.apply(q, &vec![Complex64::from(1.0); self.g.nrows()])
    }
}

/// `e^{-rT} E_x[1{τ ≤ T} f(Y_T)]` for every state, from
/// `ũ(q) = H1(q + r) ((q + r) I - G)^{-1} f`.
pub fn min_parisian_hit_prices(
    gen: &Generator,
    mh: &MinHit,
    payoff: &[f64],
    maturity: f64,
    rate: f64,
    inv: &Inversion,
) -> Result<Vec<f64>> {
    inv.grid(maturity)?.invert_vec(|q| {
        let s = q + rate;
        let w = european_transform(gen, payoff, s)?;
        mh.apply(s, &w)
    })
}

/// Discounted price of a claim paid at `T` if `x ≥ B` was reached before `T`
/// (no Parisian trigger): the `D → ∞` limit.
pub fn barrier_hit_prices(
    gen: &Generator,
    nodes: &[f64],
    cap: f64,
    payoff: &[f64],
    maturity: f64,
    rate: f64,
    inv: &Inversion,
) -> Result<Vec<f64>> {
    let g = gen.to_dense();
    let below: Vec<bool> = nodes.iter().map(|&x| x < cap).collect();
    let above: Vec<bool> = below.iter().map(|x| !x).collect();
    inv.grid(maturity)?.invert_vec(|q| {
        let s = q + rate;
        let w = european_transform(gen, payoff, s)?;
        let rhs: Vec<Complex64> = w
            .iter()
            .zip(&above)
            .map(|(v, &a)| if a { *v } else { Complex64::from(0.0) })
            .collect();
        ComplexLu::new(masked_dense(&g, &below, s), "first-passage resolvent")?.solve_vec(&rhs)
    })
}
