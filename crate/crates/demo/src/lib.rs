//! Browser bindings: a Parisian CDF curve for Brownian motion, a convergence
//! ladder for the Black-Scholes down-and-in call, and the price as a function
//! of the window `D`.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use parisian_ctmc::model::{build_preset, default_params, Params};
use parisian_ctmc::pricing::{fitted_order, parisian_cdf_all, richardson_extrapolate, Inversion, Payoff};
use parisian_ctmc::setup::{Experiment, Quantity};
use parisian_ctmc::{DriftScheme, Generator, Grid, ParisianProblem, ParisianSolver, Preset, Side};
use wasm_bindgen::prelude::*;

fn js(e: parisian_ctmc::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[cfg(target_arch = "wasm32")]
fn now_ms() -> f64 {
    js_sys::Date::now()
}

#[cfg(not(target_arch = "wasm32"))]
fn now_ms() -> f64 {
    0.0
}

fn side(below: bool) -> Side {
    if below {
        Side::Below
    } else {
        Side::Above
    }
}

/// `P_0[τ ≤ t]` for Brownian motion with drift `mu` and volatility `sigma`,
/// barrier `level`, window `window`, at `points` times evenly spaced on
/// `(0, t_max]`. The chain lives on `n` uniform steps over `level ± 6σ√t_max`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn cdf_curve(
    mu: f64,
    sigma: f64,
    level: f64,
    window: f64,
    below: bool,
    t_max: f64,
    points: usize,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    if !(t_max > 0.0) || points == 0 {
        return Err(JsError::new("t_max must be positive and points at least 1"));
    }
    let mut params = default_params(Preset::Bm);
    params.insert("mu".into(), mu);
    params.insert("sigma".into(), sigma);
    let spec = build_preset(Preset::Bm, &params).and_then(|m| m.single()).map_err(js)?;
    let half = 6.0 * sigma * t_max.sqrt();
    let lo = level.min(0.0) - half;
    let hi = level.max(0.0) + half;
    let grid = Grid::barrier_on_grid(lo, hi, level, n).map_err(js)?;
    let start = grid.nearest(0.0);
    let gen = Generator::build(&spec, &grid, DriftScheme::Central).map_err(js)?;
    let prob = ParisianProblem::new(side(below), level, window, grid.nodes()).map_err(js)?;
    let solver = ParisianSolver::auto(&gen, &prob).map_err(js)?;
    let inv = Inversion::default();
    (1..=points)
        .map(|i| {
            let t = t_max * i as f64 / points as f64;
            parisian_cdf_all(&solver, t, &inv)
                .map(|v| v[start].clamp(0.0, 1.0))
                .map_err(js)
        })
        .collect()
}

fn black_scholes(sigma: f64, window: f64, strike: f64) -> Result<Experiment, JsError> {
    let mut params: Params = default_params(Preset::Bs);
    params.insert("sigma".into(), sigma);
    let mut e = Experiment::with_params(Preset::Bs, &params).map_err(js)?;
    e.window = window;
    e.payoff = Payoff::Call { strike };
    Ok(e)
}

/// Convergence ladder of the down-and-in call (`S₀ = L = 90`, `T = 1`,
/// `r = 0.05`) on piecewise-uniform grids. Returns rows
/// `[n, δ_max, value, |error|, ms]` flattened, followed by the fitted order.
/// Errors are measured against the Richardson value of the two finest levels.
#[wasm_bindgen]
pub fn convergence(sigma: f64, window: f64, strike: f64, ladder: Vec<u32>) -> Result<Vec<f64>, JsError> {
    let e = black_scholes(sigma, window, strike)?;
    let mut out = Vec::with_capacity(5 * ladder.len() + 1);
    let mut evals = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let t0 = now_ms();
        let v = e.evaluate(n as usize, Quantity::Price).map_err(js)?;
        evals.push((v, now_ms() - t0));
    }
    let reference = match evals.as_slice() {
        [.., (a, _), (b, _)] => richardson_extrapolate(&[(a.delta_max, a.value), (b.delta_max, b.value)]).ok(),
        _ => None,
    };
    let mut deltas = Vec::new();
    let mut errors = Vec::new();
    for (v, ms) in &evals {
        let err = reference.map_or(f64::NAN, |r| (v.value - r).abs());
        out.extend([v.n as f64, v.delta_max, v.value, err, *ms]);
        deltas.push(v.delta_max);
        errors.push(err);
    }
    let order = match reference {
        Some(_) if evals.len() >= 3 => {
            // the finest level sits on the reference, so leave it out of the fit
            let k = evals.len() - 1;
            fitted_order(&deltas[..k], &errors[..k]).unwrap_or(f64::NAN)
        }
        _ => f64::NAN,
    };
    out.push(order);
    Ok(out)
}

/// Down-and-in call price for each window in `windows` on an `n`-step grid.
#[wasm_bindgen]
pub fn price_vs_window(sigma: f64, strike: f64, windows: Vec<f64>, n: usize) -> Result<Vec<f64>, JsError> {
    windows
        .iter()
        .map(|&d| {
            let e = black_scholes(sigma, d, strike)?;
            e.evaluate(n, Quantity::Price).map(|v| v.value).map_err(js)
        })
        .collect()
}
