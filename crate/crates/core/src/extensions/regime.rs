//! Regime-switching chains `G̃ = diag(G_1..G_m) + Λ ⊗ I` and the two-layer
//! stochastic-volatility construction.
//!
//! Product states are ordered regime-major: index `k·n + i` is node `i` in
//! regime `k`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::generator::{DriftScheme, Generator};
use crate::grid::Grid;
use crate::linalg::dense::RMat;
use crate::linalg::expmv::ExpmvScheme;
use crate::model::{ModelSpec, RegimeModel};
use crate::parisian::{ParisianProblem, ParisianSolver, Side, SolverPath};
use crate::pricing::{parisian_option_prices, Inversion, Payoff};
use crate::quad::{integrate, Tolerance};

/// Generator over (node, regime) pairs with the asset price of each state.
#[derive(Clone, Debug)]
pub struct RsGenerator {
    pub generator: Generator,
    pub grid: Grid,
    pub regimes: usize,
    /// `ζ(x, v)` per product state.
    pub prices: Vec<f64>,
}

impl RsGenerator {
    /// Assembles `diag(G_k) + Λ ⊗ I`. Rows of states absorbing in `x` are
    /// zeroed entirely, so boundary states also freeze the regime.
    pub fn from_blocks(blocks: &[Generator], rates: &[Vec<f64>], grid: Grid, prices: Vec<f64>) -> Result<Self> {
        let m = blocks.len();
        let n = grid.len();
        if m == 0 || rates.len() != m {
            return Err(Error::config("model.regime_rates", format!("expected {m} rows")));
        }
        if blocks.iter().any(|b| b.dim() != n) {
            return Err(Error::usage("regime generators must share the grid"));
        }
        if prices.len() != n * m {
            return Err(Error::usage("one price per product state is required"));
        }
        let mut g = RMat::zeros(n * m, n * m);
        for (k, b) in blocks.iter().enumerate() {
            for i in 0..n {
                if b.absorbing()[i] {
                    continue;
                }
                for (j, v) in b.row(i) {
                    g[(k * n + i, k * n + j)] += v;
                }
                for l in 0..m {
                    g[(k * n + i, l * n + i)] += rates[k][l];
                }
            }
        }
        Ok(RsGenerator {
            generator: Generator::from_dense(g)?,
            grid,
            regimes: m,
            prices,
        })
    }

    /// Builds each regime on `grid`; prices are `ζ(x) = transform(x)`.
    pub fn build(model: &RegimeModel, grid: &Grid, drift: DriftScheme) -> Result<Self> {
        let blocks = model
            .regimes
            .iter()
            .map(|spec| Generator::build(spec, grid, drift))
            .collect::<Result<Vec<_>>>()?;
        let prices = model
            .regimes
            .iter()
            .flat_map(|spec| grid.nodes().iter().map(move |&x| spec.state_transform.apply(x)))
            .collect();
        Self::from_blocks(&blocks, &model.rates, grid.clone(), prices)
    }

    pub fn index(&self, regime: usize, node: usize) -> usize {
        regime * self.grid.len() + node
    }

    /// Parisian problem with masks `ζ < L` (below) or `ζ > L` (above).
    pub fn problem(&self, side: Side, barrier: f64, window: f64) -> Result<ParisianProblem> {
        let mask = self
            .prices
            .iter()
            .map(|&s| match side {
                Side::Below => s < barrier,
                Side::Above => s > barrier,
            })
            .collect();
        ParisianProblem::from_mask(side, barrier, window, mask)
    }
}

/// Inputs of [`rs_parisian_price`].
#[derive(Clone, Copy, Debug)]
pub struct RsPriceRequest {
    pub side: Side,
    /// Barrier in asset-price units.
    pub barrier: f64,
    pub window: f64,
    pub payoff: Payoff,
    pub maturity: f64,
    pub rate: f64,
    pub node: usize,
    pub regime: usize,
}

/// Discounted Parisian option price at `(x_node, v_regime)`.
pub fn rs_parisian_price(rs: &RsGenerator, req: &RsPriceRequest, inv: &Inversion, scheme: ExpmvScheme) -> Result<f64> {
    if req.regime >= rs.regimes || req.node >= rs.grid.len() {
        return Err(Error::usage("start state outside the product grid"));
    }
    let prob = rs.problem(req.side, req.barrier, req.window)?;
    let solver = ParisianSolver::new(&rs.generator, &prob, scheme, SolverPath::Dense)?;
    let f = req.payoff.on_prices(&rs.prices);
    let all = parisian_option_prices(&rs.generator, &solver, &f, req.maturity, req.rate, inv)?;
    Ok(all[rs.index(req.regime, req.node)])
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Stochastic-volatility inputs
/// `dS = ω(S, v) dt + m(v) Γ(S) dW¹`, `dv = μ(v) dt + σ(v) dW²`, `d⟨W¹, W²⟩ = ρ dt`.
#[derive(Clone)]
pub struct SvSpec {
    pub omega: Fn2,
    pub m: Fn1,
    pub gamma: Fn1,
    pub mu: Fn1,
    pub sigma: Fn1,
    pub rho: f64,
    /// Lower limit of `g(s) = ∫ 1/Γ`; must lie where `Γ > 0`.
    pub s_ref: f64,
    /// Lower limit of `f(v) = ∫ m/σ`.
    pub v_ref: f64,
}

impl std::fmt::Debug for SvSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SvSpec")
            .field("rho", &self.rho)
            .field("s_ref", &self.s_ref)
            .field("v_ref", &self.v_ref)
            .finish_non_exhaustive()
    }
}

fn deriv(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1e-3);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a <= b {
        integrate(f, a, b, Tolerance::default())
    } else {
        Ok(-integrate(f, b, a, Tolerance::default())?)
    }
}

impl SvSpec {
    fn check(&self) -> Result<()> {
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::config(
                "sv.rho",
                format!("|rho| must be at most 1, got {}", self.rho),
            ));
        }
        if !((self.gamma)(self.s_ref) > 0.0) {
            return Err(Error::config("sv.s_ref", "Γ must be positive at the reference point"));
        }
        Ok(())
    }

    /// `g(s) = ∫_{s_ref}^s du / Γ(u)`.
    pub fn g(&self, s: f64) -> Result<f64> {
        quad(|u| 1.0 / (self.gamma)(u), self.s_ref, s)
    }

    /// `f(v) = ∫_{v_ref}^v m(u) / σ(u) du`.
    pub fn f(&self, v: f64) -> Result<f64> {
        quad(|u| (self.m)(u) / (self.sigma)(u), self.v_ref, v)
    }

    /// `g⁻¹(y)` by bracketing and bisection on `s > 0`.
    pub fn g_inverse(&self, y: f64) -> Result<f64> {
        let mut lo = self.s_ref;
        let mut hi = self.s_ref;
        let target = |s: f64| self.g(s).map(|v| v - y);
        let mut t_lo = target(lo)?;
        let mut t_hi = t_lo;
        let mut k = 0;
        while t_lo > 0.0 || t_hi < 0.0 {
            if t_lo > 0.0 {
                lo *= 0.5;
                t_lo = target(lo)?;
            }
            if t_hi < 0.0 {
                hi *= 2.0;
                t_hi = target(hi)?;
            }
            k += 1;
            if k > 200 {
                return Err(Error::numerical(format!("could not bracket g⁻¹({y})")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) <= 1e-15 * mid {
                break;
            }
            if target(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `ζ(x, v) = g⁻¹(x + ρ f(v))`.
    pub fn zeta(&self, x: f64, v: f64) -> Result<f64> {
        self.g_inverse(x + self.rho * self.f(v)?)
    }

    /// `h(v) = μ m/σ + (σ m' - σ' m)/2`.
    pub fn h(&self, v: f64) -> f64 {
        let (m, s) = ((self.m)(v), (self.sigma)(v));
        (self.mu)(v) * m / s + 0.5 * (s * deriv(&*self.m, v) - deriv(&*self.sigma, v) * m)
    }

    /// Drift of `X = g(S) - ρ f(v)` given `v`.
    pub fn theta(&self, x: f64, v: f64) -> Result<f64> {
        let s = self.zeta(x, v)?;
        let m = (self.m)(v);
        Ok((self.omega)(s, v) / (self.gamma)(s) - 0.5 * deriv(&*self.gamma, s) * m * m - self.rho * self.h(v))
    }
}

/// Two-layer chain: a variance chain on `v_grid` (its generator is `Λ`) and,
/// for each variance node, an `x` chain on `x_grid`.
pub fn sv_two_layer_build(spec: &SvSpec, v_grid: &Grid, x_grid: &Grid, drift: DriftScheme) -> Result<RsGenerator> {
    spec.check()?;
    let (mu, sigma) = (spec.mu.clone(), spec.sigma.clone());
    let vmodel = ModelSpec::new("variance", move |v| mu(v), move |v| sigma(v));
    let lam = Generator::build(&vmodel, v_grid, drift)?.to_dense();
    let m = v_grid.len();
    let rates: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| lam[(i, j)]).collect()).collect();
    let xs = x_grid.nodes();
    let mut blocks = Vec::with_capacity(m);
    let mut prices = Vec::with_capacity(m * xs.len());
    for &v in v_grid.nodes() {
        let drift_vals = xs.iter().map(|&x| spec.theta(x, v)).collect::<Result<Vec<f64>>>()?;
        if let Some(i) = drift_vals.iter().position(|d| !d.is_finite()) {
            return Err(Error::numerical(format!(
                "drift is not finite at x = {}, v = {v}",
                xs[i]
            )));
        }
        let vol = (1.0 - spec.rho * spec.rho).sqrt() * (spec.m)(v);
        let nodes = xs.to_vec();
        let spec_v = ModelSpec::new(
            format!("x | v = {v}"),
            move |x| {
                let i = nodes.partition_point(|&y| y < x).min(nodes.len() - 1);
                drift_vals[i]
            },
            move |_| vol,
        );
        blocks.push(Generator::build(&spec_v, x_grid, drift)?);
        for &x in xs {
            prices.push(spec.zeta(x, v)?);
        }
    }
    RsGenerator::from_blocks(&blocks, &rates, x_grid.clone(), prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_preset, default_params, Preset};

    #[test]
    fn kronecker_structure() {
        let rs_model = build_preset(Preset::RsBs, &default_params(Preset::RsBs))
            .unwrap()
            .regime()
            .unwrap();
        let grid = Grid::uniform(4.0, 5.0, 8).unwrap();
        let rs = RsGenerator::build(&rs_model, &grid, DriftScheme::default()).unwrap();
        let g1 = Generator::build(&rs_model.regimes[0], &grid, DriftScheme::default()).unwrap();
        let g2 = Generator::build(&rs_model.regimes[1], &grid, DriftScheme::default()).unwrap();
        let v: Vec<f64> = (0..18).map(|i| (i as f64 * 0.7).cos()).collect();
        let out = rs.generator.apply(&v);
        let (a, b) = v.split_at(9);
        let (ga, gb) = (g1.apply(a), g2.apply(b));
        for i in 1..8 {
            let e1 = ga[i] - 0.75 * a[i] + 0.75 * b[i];
            let e2 = gb[i] + 0.25 * a[i] - 0.25 * b[i];
            assert!((out[i] - e1).abs() < 1e-12);
            assert!((out[9 + i] - e2).abs() < 1e-12);
        }
        assert!(rs.generator.row_diagnostics().is_valid());
    }

    #[test]
    fn degenerate_sv_is_black_scholes() {
        let sv = SvSpec {
            omega: Arc::new(|s, _| 0.05 * s),
            m: Arc::new(|_| 0.3),
            gamma: Arc::new(|s| s),
            mu: Arc::new(|v| 1.0 - v),
            sigma: Arc::new(|_| 0.2),
            rho: 0.0,
            s_ref: 1.0,
            v_ref: 1.0,
        };
        let x = 4.5f64;
        assert!((sv.zeta(x, 1.3).unwrap() - x.exp()).abs() < 1e-10 * x.exp());
        assert!((sv.theta(x, 0.7).unwrap() - (0.05 - 0.045)).abs() < 1e-8);
    }
}
