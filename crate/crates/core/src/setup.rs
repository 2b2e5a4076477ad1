//! Standard experiment: a model, a Parisian request in asset-price units, a
//! grid recipe and the numerical settings. [`Experiment::build`] turns it into
//! a chain for a node budget `n`; evaluations report `(n, δ_max, value, ms)`.

use crate::error::{Error, Result};
use crate::extensions::regime::RsGenerator;
use crate::generator::{DriftScheme, Generator};
use crate::grid::{default_domain, Grid};
use crate::linalg::expmv::ExpmvScheme;
use crate::mc::{self, Functional, PathEstimate};
use crate::model::{build_preset, default_params, Model, Params, Preset};
use crate::parisian::{ParisianProblem, ParisianSolver, Side, SolverPath};
use crate::pricing::{
    fitted_order, parisian_cdf_all, parisian_option_prices, richardson_extrapolate, ruin_probability,
    two_grid_price_k_eq_l, Horizon, Inversion, Payoff, TwoGridRequest,
};

/// Grid recipe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GridKind {
    Uniform,
    /// Barrier on a node and strike midway between nodes.
    #[default]
    PiecewiseUniform,
}

impl std::str::FromStr for GridKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(GridKind::Uniform),
            "pu" | "piecewise_uniform" => Ok(GridKind::PiecewiseUniform),
            _ => Err(Error::config(
                "grid.type",
                format!("unknown grid type `{s}` (expected uniform or pu)"),
            )),
        }
    }
}

/// Quantity computed by an evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    /// Discounted Parisian option price at maturity.
    Price,
    /// `P[τ ≤ t]`.
    Cdf { t: f64 },
    /// Parisian ruin probability.
    Ruin { horizon: Horizon },
}

/// Full experiment description.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub model: Model,
    pub side: Side,
    /// Barrier in asset-price units.
    pub barrier: f64,
    /// Spot in asset-price units.
    pub spot: f64,
    pub window: f64,
    pub payoff: Payoff,
    pub maturity: f64,
    pub rate: f64,
    /// Starting regime for regime-switching models.
    pub regime: usize,
    pub grid: GridKind,
    /// Fixed piecewise-uniform block counts; when set they replace the budget `n`.
    pub blocks: Option<[usize; 3]>,
    /// Domain in chain coordinates; `None` uses `x₀ ± width·scale·√T`.
    pub domain: Option<(f64, f64)>,
    pub width: f64,
    pub inversion: Inversion,
    pub scheme: ExpmvScheme,
    pub drift: DriftScheme,
    pub path: SolverPath,
}

/// Chain built for one node budget.
#[derive(Debug)]
pub struct Built {
    pub n: usize,
    pub grid: Grid,
    pub chain: Chain,
    pub problem: ParisianProblem,
    /// Start state, or `None` when `x₀` falls between nodes.
    pub start: Option<usize>,
    /// Payoff per chain state.
    pub payoff: Vec<f64>,
}

/// Single-regime or product chain.
#[derive(Debug)]
pub enum Chain {
    Single(Generator),
    Regime(RsGenerator),
}

impl Chain {
    pub fn generator(&self) -> &Generator {
        match self {
            Chain::Single(g) => g,
            Chain::Regime(rs) => &rs.generator,
        }
    }
}

/// One evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub n: usize,
    pub delta_max: f64,
    pub value: f64,
    pub runtime_ms: f64,
}

/// Row of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderRow {
    pub eval: Evaluation,
    /// Richardson value from this row and the previous one.
    pub extrapolated: Option<f64>,
    pub abs_err: Option<f64>,
}

/// Convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub rows: Vec<LadderRow>,
    /// Fitted log-log slope of the errors against `δ_max`.
    pub order: Option<f64>,
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t0 = std::time::Instant::now();
    let v = f()?;
    Ok((v, t0.elapsed().as_secs_f64() * 1e3))
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    Ok((f()?, 0.0))
}

impl Experiment {
    /// Defaults of the option experiments: `S₀ = L = 90`, `K = 95`,
    /// `D = 1/12`, `T = 1`, `r = 0.05`, down-and-in call. The BM preset gets
    /// the standard Brownian CDF setup instead (`L = 0`, `D = 1`, `x₀ = 0`).
    pub fn preset(preset: Preset) -> Result<Self> {
        Self::with_params(preset, &default_params(preset))
    }

    pub fn with_params(preset: Preset, params: &Params) -> Result<Self> {
        let model = build_preset(preset, params)?;
        let mut e = Experiment {
            model,
            side: Side::Below,
            barrier: 90.0,
            spot: 90.0,
            window: 1.0 / 12.0,
            payoff: Payoff::Call { strike: 95.0 },
            maturity: 1.0,
            rate: params.get("r").copied().unwrap_or(0.05),
            regime: 0,
            grid: GridKind::PiecewiseUniform,
            blocks: None,
            domain: None,
            width: 5.0,
            inversion: Inversion::default(),
            scheme: ExpmvScheme::default(),
            drift: DriftScheme::default(),
            path: SolverPath::Auto,
        };
        if preset == Preset::Bm {
            e.barrier = 0.0;
            e.spot = 0.0;
            e.window = 1.0;
            e.payoff = Payoff::Constant(1.0);
            e.maturity = 1.5;
            e.rate = 0.0;
            e.drift = DriftScheme::Central;
        }
        Ok(e)
    }

    /// `x₀`, `L` and (if any) `K` in chain coordinates.
    pub fn chain_coords(&self) -> Result<(f64, f64, Option<f64>)> {
        let tr = self.model.state_transform();
        let x0 = tr.inverse(self.spot);
        let l = tr.inverse(self.barrier);
        let k = self.payoff.strike().map(|k| tr.inverse(k));
        for (name, v) in [("option.S0", x0), ("parisian.L", l)] {
            if !v.is_finite() {
                return Err(Error::config(name, "lies outside the state space"));
            }
        }
        if matches!(k, Some(v) if !v.is_finite()) {
            return Err(Error::config("option.K", "lies outside the state space"));
        }
        Ok((x0, l, k))
    }

    /// Localization domain.
    pub fn domain(&self) -> Result<(f64, f64)> {
        let (x0, l, k) = self.chain_coords()?;
        let (lo, hi) = match self.domain {
            Some(d) => d,
            None => default_domain(x0, self.model.scale(), self.maturity.max(self.window), self.width),
        };
        if !(lo < hi) {
            return Err(Error::config("grid.l", "domain must satisfy l < r"));
        }
        for (name, v) in [("option.S0", Some(x0)), ("parisian.L", Some(l)), ("option.K", k)] {
            if let Some(v) = v {
                if !(lo < v && v < hi) {
                    return Err(Error::config(name, format!("{v} lies outside the domain ({lo}, {hi})")));
                }
            }
        }
        Ok((lo, hi))
    }

    fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) {
            return Err(Error::config("parisian.D", "window must be positive"));
        }
        if !(self.maturity > 0.0) {
            return Err(Error::config("option.T", "maturity must be positive"));
        }
        if !(self.width > 0.0) {
            return Err(Error::config("grid.width", "must be positive"));
        }
        Ok(())
    }

    /// `true` when the strike coincides with the barrier (two-grid path).
    pub fn strike_is_barrier(&self) -> bool {
        self.payoff
            .strike()
            .is_some_and(|k| (k - self.barrier).abs() <= 1e-12 * self.barrier.abs().max(1.0))
    }

    /// Grid for a budget of `n` steps.
    pub fn grid_for(&self, n: usize) -> Result<Grid> {
        self.validate()?;
        let (lo, hi) = self.domain()?;
        let (_, l, k) = self.chain_coords()?;
        match (self.grid, k) {
            (GridKind::Uniform, _) => Grid::uniform(lo, hi, n),
            (GridKind::PiecewiseUniform, Some(k)) if !self.strike_is_barrier() => match self.blocks {
                Some([n1, n2, n3]) => Grid::piecewise_uniform(lo, hi, k, l, n1, n2, n3),
                None => Grid::piecewise_uniform_budget(lo, hi, k, l, n),
            },
            (GridKind::PiecewiseUniform, _) => Grid::barrier_on_grid(lo, hi, l, n),
        }
    }

    /// Builds grid, chain and problem for `n` steps.
    pub fn build(&self, n: usize) -> Result<Built> {
        let grid = self.grid_for(n)?;
        let (x0, l, _) = self.chain_coords()?;
        let tr = self.model.state_transform();
        let (chain, problem, payoff) = match &self.model {
            Model::Single(spec) => {
                let g = Generator::build(spec, &grid, self.drift)?;
                let p = ParisianProblem::new(self.side, l, self.window, grid.nodes())?;
                let f = self.payoff.on_nodes(grid.nodes(), tr);
                (Chain::Single(g), p, f)
            }
            Model::Regime(rm) => {
                if self.regime >= rm.count() {
                    return Err(Error::config(
                        "model.regime",
                        format!("start regime {} out of range", self.regime),
                    ));
                }
                let rs = RsGenerator::build(rm, &grid, self.drift)?;
                let p = rs.problem(self.side, self.barrier, self.window)?;
                let f = self.payoff.on_prices(&rs.prices);
                (Chain::Regime(rs), p, f)
            }
        };
        let start = grid.index_of(x0).map(|i| match &chain {
            Chain::Single(_) => i,
            Chain::Regime(rs) => rs.index(self.regime, i),
        });
        Ok(Built {
            n,
            grid,
            chain,
            problem,
            start,
            payoff,
        })
    }

    fn solver(&self, b: &Built) -> Result<ParisianSolver> {
        let path = match b.chain {
            Chain::Regime(_) => SolverPath::Dense,
            Chain::Single(_) => self.path,
        };
        ParisianSolver::new(b.chain.generator(), &b.problem, self.scheme, path)
    }

    /// Value at `x₀` from per-state values (interpolated if `x₀` is not a node).
    fn at_start(&self, b: &Built, all: &[f64]) -> Result<f64> {
        let (x0, _, _) = self.chain_coords()?;
        let n = b.grid.len();
        let block = match b.chain {
            Chain::Single(_) => all,
            Chain::Regime(_) => &all[self.regime * n..(self.regime + 1) * n],
        };
        Ok(b.grid.interpolate(block, x0))
    }

    /// All-state values of `q` on a built chain.
    pub fn values(&self, b: &Built, q: Quantity) -> Result<Vec<f64>> {
        let solver = self.solver(b)?;
        let g = b.chain.generator();
        match q {
            Quantity::Price => parisian_option_prices(g, &solver, &b.payoff, self.maturity, self.rate, &self.inversion),
            Quantity::Cdf { t } => {
                if !(t > 0.0) {
                    return Err(Error::config("cdf.t", format!("must be positive, got {t}")));
                }
                Ok(parisian_cdf_all(&solver, t, &self.inversion)?
                    .into_iter()
                    .map(|v| v.clamp(0.0, 1.0))
                    .collect())
            }
            Quantity::Ruin { horizon } => (0..g.dim())
                .map(|i| ruin_probability(&solver, horizon, i, &self.inversion).map(|r| r.value))
                .collect(),
        }
    }

    /// Evaluates `q` at `x₀` on an `n`-step grid.
    pub fn evaluate(&self, n: usize, q: Quantity) -> Result<Evaluation> {
        if q == Quantity::Price && self.strike_is_barrier() {
            return self.evaluate_two_grid(n);
        }
        let ((value, delta_max), runtime_ms) = timed(|| {
            let b = self.build(n)?;
            let v = match (q, b.start) {
                // the ruin path evaluates single states only
                (Quantity::Ruin { horizon }, Some(s)) => {
                    ruin_probability(&self.solver(&b)?, horizon, s, &self.inversion)?.value
                }
                _ => self.at_start(&b, &self.values(&b, q)?)?,
            };
            Ok((v, b.grid.max_step()))
        })?;
        Ok(Evaluation {
            n,
            delta_max,
            value,
            runtime_ms,
        })
    }

    fn evaluate_two_grid(&self, n: usize) -> Result<Evaluation> {
        let Model::Single(spec) = &self.model else {
            return Err(Error::usage(
                "the strike-equals-barrier construction supports single-regime models",
            ));
        };
        self.validate()?;
        let (lo, hi) = self.domain()?;
        let (x0, l, _) = self.chain_coords()?;
        let req = TwoGridRequest {
            lower: lo,
            upper: hi,
            n,
            side: self.side,
            barrier: l,
            window: self.window,
            payoff: self.payoff,
            maturity: self.maturity,
            rate: self.rate,
            x0,
        };
        let (value, runtime_ms) =
            timed(|| two_grid_price_k_eq_l(spec, &req, &self.inversion, self.scheme, self.drift))?;
        let delta_max = Grid::barrier_on_grid(lo, hi, l, n)?.max_step();
        Ok(Evaluation {
            n,
            delta_max,
            value,
            runtime_ms,
        })
    }

    /// Convergence ladder over budgets `ns`. Errors are measured against
    /// `reference`, or against the Richardson value of the two finest levels.
    pub fn study(&self, ns: &[usize], q: Quantity, reference: Option<f64>) -> Result<Study> {
        if ns.is_empty() {
            return Err(Error::config("study.ladder", "at least one level is required"));
        }
        let evals = ns.iter().map(|&n| self.evaluate(n, q)).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(evals.len());
        for (i, e) in evals.iter().enumerate() {
            let extrapolated = if i > 0 {
                richardson_extrapolate(&[(evals[i - 1].delta_max, evals[i - 1].value), (e.delta_max, e.value)]).ok()
            } else {
                None
            };
            rows.push(LadderRow {
                eval: *e,
                extrapolated,
                abs_err: None,
            });
        }
        let reference = reference.or_else(|| rows.last().and_then(|r| r.extrapolated));
        if let Some(r) = reference {
            for row in &mut rows {
                row.abs_err = Some((row.eval.value - r).abs());
            }
        }
        let order = match reference {
            Some(_) if rows.len() >= 2 => {
                let d: Vec<f64> = rows.iter().map(|r| r.eval.delta_max).collect();
                let e: Vec<f64> = rows.iter().map(|r| r.abs_err.unwrap_or(0.0)).collect();
                fitted_order(&d, &e).ok()
            }
            _ => None,
        };
        Ok(Study { rows, order })
    }

    /// Monte Carlo estimate of `q` on the `n`-step chain (the oracle).
    pub fn monte_carlo(&self, n: usize, q: Quantity, paths: usize, seed: u64) -> Result<PathEstimate> {
        let b = self.build(n)?;
        let start = b
            .start
            .ok_or_else(|| Error::usage("the start is not a grid node; use a piecewise-uniform grid"))?;
        let functional = match q {
            Quantity::Price => Functional::Payoff {
                f: b.payoff.clone(),
                maturity: self.maturity,
                rate: self.rate,
            },
            Quantity::Cdf { t } => Functional::Cdf { t },
            Quantity::Ruin {
                horizon: Horizon::Finite(t),
            } => Functional::Cdf { t },
            Quantity::Ruin { .. } => {
                return Err(Error::usage("the simulator needs a finite horizon"));
            }
        };
        mc::simulate_parisian(b.chain.generator(), &b.problem, &functional, start, paths, seed)
    }
}
