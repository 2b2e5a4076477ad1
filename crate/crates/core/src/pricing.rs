//! CDFs, option prices and ruin probabilities from the Parisian transforms,
//! plus Richardson extrapolation and convergence-order fitting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::{DriftScheme, Generator};
use crate::grid::Grid;
use crate::laplace::{LaplaceGrid, DEFAULT_A, DEFAULT_K1, DEFAULT_K2};
use crate::linalg::expmv::ExpmvScheme;
use crate::linalg::masked::MaskedOperator;
use crate::model::{ModelSpec, StateTransform};
use crate::parisian::{ParisianProblem, ParisianSolver, Side, SolverPath};

/// Euler-inversion parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    pub a: f64,
    pub k1: usize,
    pub k2: usize,
}

impl Default for Inversion {
    fn default() -> Self {
        Inversion {
            a: DEFAULT_A,
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
        }
    }
}

impl Inversion {
    pub fn grid(&self, t: f64) -> Result<LaplaceGrid> {
        LaplaceGrid::new(t, self.a, self.k1, self.k2)
    }
}

/// Payoff as a function of the asset price `S = ζ(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Payoff {
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
    /// Pays a constant; with `1.0` the price is a discounted probability.
    Constant(f64),
}

impl Payoff {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Payoff::Call { strike } => (s - strike).max(0.0),
            Payoff::Put { strike } => (strike - s).max(0.0),
            Payoff::Constant(c) => c,
        }
    }

    pub fn strike(&self) -> Option<f64> {
        match *self {
            Payoff::Call { strike } | Payoff::Put { strike } => Some(strike),
            Payoff::Constant(_) => None,
        }
    }

    /// Payoff vector on chain states given their asset prices.
    pub fn on_prices(&self, prices: &[f64]) -> Vec<f64> {
        prices.iter().map(|&s| self.value(s)).collect()
    }

    /// Payoff vector on grid nodes mapped through `transform`.
    pub fn on_nodes(&self, nodes: &[f64], transform: StateTransform) -> Vec<f64> {
        nodes.iter().map(|&x| self.value(transform.apply(x))).collect()
    }
}

/// `w̃(q) = (qI - G)^{-1} f`, the transform of the undiscounted European value.
pub fn european_transform(gen: &Generator, payoff: &[f64], q: Complex64) -> Result<Vec<Complex64>> {
    if payoff.len() != gen.dim() {
        return Err(Error::usage(format!(
            "payoff has {} entries, generator has {} states",
            payoff.len(),
            gen.dim()
        )));
    }
    if let Some(i) = payoff.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("payoff is not finite at state {i}")));
    }
    let full = vec![true; gen.dim()];
    let rhs: Vec<Complex64> = payoff.iter().map(|&v| Complex64::from(v)).collect();
    MaskedOperator::new(gen, &full, q)?.solve(&rhs)
}

/// Smallest delay `t - D`, relative to `D`, passed to the inversion.
const MIN_DELAY: f64 = 1e-9;

/// Inversion grid for a transform carrying the factor `e^{-qD}` (`τ ≥ D`):
/// `None` when `t < D`, otherwise the grid at `t - D` for the transform with
/// the factor removed. This keeps the jump of the law at `D` away from the
/// inversion point.
pub fn delayed_grid(inv: &Inversion, t: f64, window: f64) -> Result<Option<LaplaceGrid>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    if t < window {
        return Ok(None);
    }
    inv.grid((t - window).max(MIN_DELAY * window)).map(Some)
}

/// `P_x[τ ≤ t]` for every state.
pub fn parisian_cdf_all(solver: &ParisianSolver, t: f64, inv: &Inversion) -> Result<Vec<f64>> {
    match delayed_grid(inv, t, solver.window())? {
        None => Ok(vec![0.0; solver.dim()]),
        Some(grid) => grid.invert_vec(|q| Ok(solver.h_delayed(q)?.into_iter().map(|h| h / q).collect())),
    }
}

/// `P_{x0}[τ ≤ t]` with `x0` the state index.
pub fn parisian_cdf(solver: &ParisianSolver, t: f64, start: usize, inv: &Inversion) -> Result<f64> {
    check_start(start, solver.dim())?;
    match delayed_grid(inv, t, solver.window())? {
        None => Ok(0.0),
        Some(grid) => grid.invert(|q| Ok(solver.h_delayed(q)?[start] / q)),
    }
}

fn check_start(start: usize, dim: usize) -> Result<()> {
    if start >= dim {
        return Err(Error::usage(format!("start state {start} outside 0..{dim}")));
    }
    Ok(())
}

/// Discounted `e^{-rT} E_x[1{τ ≤ T} f(Y_T)]` for every state.
pub fn parisian_option_prices(
    gen: &Generator,
    solver: &ParisianSolver,
    payoff: &[f64],
    maturity: f64,
    rate: f64,
    inv: &Inversion,
) -> Result<Vec<f64>> {
    if !(maturity > 0.0) {
        return Err(Error::config(
            "option.T",
            format!("maturity must be positive, got {maturity}"),
        ));
    }
    let grid = inv.grid(maturity)?;
    let disc = (-rate * maturity).exp();
    let u = grid.invert_vec(|q| {
        let w = european_transform(gen, payoff, q)?;
        solver.apply(q, &w)
    })?;
    Ok(u.into_iter().map(|v| disc * v).collect())
}

/// Discounted Parisian option price at state `start`.
pub fn parisian_option_price(
    gen: &Generator,
    solver: &ParisianSolver,
    payoff: &[f64],
    maturity: f64,
    rate: f64,
    start: usize,
    inv: &Inversion,
) -> Result<f64> {
    check_start(start, gen.dim())?;
    Ok(parisian_option_prices(gen, solver, payoff, maturity, rate, inv)?[start])
}

/// Ruin horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    /// `lim_{q→0} h(q)` evaluated at `small_q`.
    Infinite {
        small_q: f64,
    },
}

/// Ruin probability with, for the infinite horizon, the value at `small_q / 10`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuinEstimate {
    pub value: f64,
    pub sensitivity: Option<f64>,
}

pub const DEFAULT_SMALL_Q: f64 = 1e-8;

pub fn ruin_probability(
    solver: &ParisianSolver,
    horizon: Horizon,
    start: usize,
    inv: &Inversion,
) -> Result<RuinEstimate> {
    check_start(start, solver.dim())?;
    match horizon {
        Horizon::Finite(t) => Ok(RuinEstimate {
            value: parisian_cdf(solver, t, start, inv)?,
            sensitivity: None,
        }),
        Horizon::Infinite { small_q } => {
            if !(small_q > 0.0) {
                return Err(Error::config("ruin.small_q", "must be positive"));
            }
            let value = solver.h_real(small_q)?[start];
            let tenth = solver.h_real(small_q / 10.0)?[start];
            Ok(RuinEstimate {
                value,
                sensitivity: Some(tenth),
            })
        }
    }
}

/// Richardson extrapolation in `δ²` over the last two `(δ_max, value)` pairs.
pub fn richardson_extrapolate(results: &[(f64, f64)]) -> Result<f64> {
    let [.., (d1, v1), (d2, v2)] = results else {
        return Err(Error::usage("extrapolation needs at least two results"));
    };
    let (a, b) = (d1 * d1, d2 * d2);
    if a == b {
        return Err(Error::domain("extrapolation needs distinct step sizes"));
    }
    Ok((a * v2 - b * v1) / (a - b))
}

/// Least-squares slope of `ln|err|` against `ln δ`.
pub fn fitted_order(deltas: &[f64], errors: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(errors)
        .filter(|(d, e)| **d > 0.0 && e.abs() > 0.0)
        .map(|(d, e)| (d.ln(), e.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::usage("order fit needs two nonzero errors"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("order fit needs distinct step sizes"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Inputs for the strike-equals-barrier construction.
#[derive(Clone, Debug)]
pub struct TwoGridRequest {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub side: Side,
    /// Barrier in chain coordinates.
    pub barrier: f64,
    pub window: f64,
    pub payoff: Payoff,
    pub maturity: f64,
    pub rate: f64,
    /// Start in chain coordinates; interpolated if not a node.
    pub x0: f64,
}

/// Price when `K = L`: `w̃` on a strike-midway grid, interpolated (cubic) onto a
/// barrier-on-grid grid where `H(q)` is applied.
pub fn two_grid_price_k_eq_l(
    model: &ModelSpec,
    req: &TwoGridRequest,
    inv: &Inversion,
    scheme: ExpmvScheme,
    drift: DriftScheme,
) -> Result<f64> {
    let tr = model.state_transform;
    let strike = match req.payoff.strike() {
        Some(k) => tr.inverse(k),
        None => return Err(Error::usage("the two-grid construction needs a strike payoff")),
    };
    if (strike - req.barrier).abs() > 1e-12 * req.barrier.abs().max(1.0) {
        return Err(Error::usage(
            "strike differs from the barrier; use the single piecewise-uniform grid",
        ));
    }
    let g1 = Grid::strike_midway(req.lower, req.upper, strike, req.n)?;
    let g2 = Grid::barrier_on_grid(req.lower, req.upper, req.barrier, req.n)?;
    let gen1 = Generator::build(model, &g1, drift)?;
    let gen2 = Generator::build(model, &g2, drift)?;
    let f1 = req.payoff.on_nodes(g1.nodes(), tr);
    let prob = ParisianProblem::new(req.side, req.barrier, req.window, g2.nodes())?;
    let solver = ParisianSolver::new(&gen2, &prob, scheme, SolverPath::Auto)?;
    let grid = inv.grid(req.maturity)?;
    let u = grid.invert_vec(|q| {
        let w1 = european_transform(&gen1, &f1, q)?;
        let w2: Vec<Complex64> = g2.nodes().iter().map(|&x| g1.interpolate(&w1, x)).collect();
        solver.apply(q, &w2)
    })?;
    Ok((-req.rate * req.maturity).exp() * g2.interpolate(&u, req.x0))
}
