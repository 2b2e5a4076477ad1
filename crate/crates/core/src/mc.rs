//! Exact event-driven simulation of a chain with excursion-clock tracking.
//!
//! Paths are piecewise constant, so excursion ages and Parisian times are
//! computed exactly. Path `k` draws from its own ChaCha8 stream `(seed, k)`;
//! values are reduced in path order, so results are bitwise reproducible for
//! any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::par;
use crate::parisian::ParisianProblem;

/// Monte Carlo estimate of a path functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(paths)`.
    pub se: f64,
    pub paths: usize,
    pub seed: u64,
    /// The start state is absorbing, so every path is constant.
    pub degenerate: bool,
}

impl PathEstimate {
    fn from_values(values: &[f64], seed: u64, degenerate: bool) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        PathEstimate {
            mean,
            se: (var / n).sqrt(),
            paths: values.len(),
            seed,
            degenerate,
        }
    }

    /// `|value - mean| ≤ k·se`, with a floor for zero-variance estimates.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.se + 1e-12
    }
}

/// Jump chain of a generator: exit rates and cumulative jump probabilities.
#[derive(Clone, Debug)]
pub struct Chain {
    exit: Vec<f64>,
    targets: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

impl Chain {
    pub fn new(gen: &Generator) -> Self {
        let n = gen.dim();
        let mut exit = vec![0.0; n];
        let mut targets = vec![Vec::new(); n];
        let mut cumulative = vec![Vec::new(); n];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, v) in gen.row(i) {
                if j != i && v > 0.0 {
                    acc += v;
                    targets[i].push(j);
                    cumulative[i].push(acc);
                }
            }
            exit[i] = acc;
        }
        Chain {
            exit,
            targets,
            cumulative,
        }
    }

    pub fn dim(&self) -> usize {
        self.exit.len()
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.exit[i] == 0.0
    }

    /// Holding time and next state from `i`; `None` if `i` is absorbing.
    fn step(&self, i: usize, rng: &mut ChaCha8Rng) -> Option<(f64, usize)> {
        let rate = self.exit[i];
        if rate == 0.0 {
            return None;
        }
        let hold = -(1.0 - rng.random::<f64>()).ln() / rate;
        let u = rng.random::<f64>() * rate;
        let c = &self.cumulative[i];
        let k = c.partition_point(|&v| v <= u).min(c.len() - 1);
        Some((hold, self.targets[i][k]))
    }
}

/// Stopping rule: `τ` is the first time a run of consecutive time inside one
/// labelled set reaches `window`, or the first entry into an `instant` state.
/// Moving between different labels restarts the clock.
#[derive(Clone, Debug)]
pub struct StoppingRule {
    pub labels: Vec<Option<usize>>,
    pub instant: Vec<bool>,
    pub window: f64,
}

impl StoppingRule {
    pub fn parisian(prob: &ParisianProblem) -> Self {
        StoppingRule {
            labels: prob.excursion_mask().iter().map(|&e| e.then_some(0)).collect(),
            instant: vec![false; prob.dim()],
            window: prob.window,
        }
    }

    /// Disjoint sets, each with its own clock.
    pub fn multi_sided(sets: &[Vec<bool>], window: f64) -> Result<Self> {
        let n = sets.first().map_or(0, Vec::len);
        let mut labels = vec![None; n];
        for (k, s) in sets.iter().enumerate() {
            for (i, &m) in s.iter().enumerate() {
                if m {
                    if labels[i].is_some() {
                        return Err(Error::config("multisided.sets", format!("sets overlap at state {i}")));
                    }
                    labels[i] = Some(k);
                }
            }
        }
        Ok(StoppingRule {
            labels,
            instant: vec![false; n],
            window,
        })
    }

    /// Excursions strictly above `level` timed against `window`, or `x ≥ cap`.
    pub fn min_hit(nodes: &[f64], level: f64, window: f64, cap: f64) -> Self {
        StoppingRule {
            labels: nodes.iter().map(|&x| (x > level).then_some(0)).collect(),
            instant: nodes.iter().map(|&x| x >= cap).collect(),
            window,
        }
    }
}

/// What happened on one path up to `horizon`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOutcome {
    /// `τ` if it occurred before `horizon`.
    pub tau: Option<f64>,
    /// State at `τ`.
    pub state_at_tau: Option<usize>,
    /// State at `horizon`.
    pub state_at_horizon: usize,
    /// `∫_0^{τ ∧ horizon} r(X_s) ds` when rates are supplied.
    pub integral: f64,
}

/// Simulates one path from `x0` on `[0, horizon]`.
pub fn run_path(
    chain: &Chain,
    rule: &StoppingRule,
    rates: Option<&[f64]>,
    x0: usize,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> PathOutcome {
    let mut t = 0.0;
    let mut x = x0;
    let mut run_start = 0.0;
    let mut label: Option<usize> = None;
    let mut tau: Option<f64> = None;
    let mut state_at_tau = None;
    let mut integral = 0.0;
    let rate_of = |i: usize| rates.map_or(0.0, |r| r[i]);
    loop {
        if tau.is_none() {
            if rule.instant[x] {
                tau = Some(t);
                state_at_tau = Some(x);
            } else if rule.labels[x] != label {
                label = rule.labels[x];
                run_start = t;
            }
        }
        let (end, next) = match chain.step(x, rng) {
            Some((h, y)) => (t + h, Some(y)),
            None => (f64::INFINITY, None),
        };
        if tau.is_none() {
            if label.is_some() && run_start + rule.window <= end.min(horizon) {
                let hit = run_start + rule.window;
                integral += rate_of(x) * (hit - t);
                tau = Some(hit);
                state_at_tau = Some(x);
            } else {
                integral += rate_of(x) * (end.min(horizon) - t);
            }
        }
        if end >= horizon {
            return PathOutcome {
                tau,
                state_at_tau,
                state_at_horizon: x,
                integral,
            };
        }
        t = end;
        x = next.expect("finite holding time has a successor");
    }
}

/// Path functionals of [`simulate`].
#[derive(Clone, Debug)]
pub enum Functional {
    /// `1{τ ≤ t}`.
    Cdf { t: f64 },
    /// `e^{-rT} f(X_T) 1{τ ≤ T}`.
    Payoff { f: Vec<f64>, maturity: f64, rate: f64 },
    /// `e^{-∫_0^τ R ds} f(R_τ) 1{τ < T}` with `R = rates(X)`.
    Bond {
        rates: Vec<f64>,
        f: Vec<f64>,
        maturity: f64,
    },
}

impl Functional {
    fn horizon(&self) -> f64 {
        match self {
            Functional::Cdf { t } => *t,
            Functional::Payoff { maturity, .. } | Functional::Bond { maturity, .. } => *maturity,
        }
    }

    fn rates(&self) -> Option<&[f64]> {
        match self {
            Functional::Bond { rates, .. } => Some(rates),
            _ => None,
        }
    }

    fn value(&self, o: &PathOutcome) -> f64 {
        match self {
            Functional::Cdf { .. } => o.tau.map_or(0.0, |_| 1.0),
            Functional::Payoff { f, maturity, rate } => match o.tau {
                Some(_) => (-rate * maturity).exp() * f[o.state_at_horizon],
                None => 0.0,
            },
            Functional::Bond { f, .. } => match (o.tau, o.state_at_tau) {
                (Some(_), Some(z)) => (-o.integral).exp() * f[z],
                _ => 0.0,
            },
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let h = self.horizon();
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::config(
                "mc.horizon",
                format!("must be positive and finite, got {h}"),
            ));
        }
        let lens: &[usize] = match self {
            Functional::Cdf { .. } => &[],
            Functional::Payoff { f, .. } => &[f.len()],
            Functional::Bond { rates, f, .. } => &[rates.len(), f.len()],
        };
        if lens.iter().any(|&l| l != n) {
            return Err(Error::usage("functional vectors must have one entry per state"));
        }
        Ok(())
    }
}

/// Minimum path count.
pub const MIN_PATHS: usize = 100;

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Estimates `E_{x0}[functional]` under `rule`.
pub fn simulate(
    gen: &Generator,
    rule: &StoppingRule,
    functional: &Functional,
    x0: usize,
    paths: usize,
    seed: u64,
) -> Result<PathEstimate> {
    let n = gen.dim();
    if x0 >= n {
        return Err(Error::usage(format!("start state {x0} outside 0..{n}")));
    }
    if paths < MIN_PATHS {
        return Err(Error::config(
            "mc.paths",
            format!("at least {MIN_PATHS} paths are required"),
        ));
    }
    if rule.labels.len() != n || rule.instant.len() != n {
        return Err(Error::usage("stopping rule does not match the generator"));
    }
    functional.validate(n)?;
    let chain = Chain::new(gen);
    let degenerate = chain.is_absorbing(x0);
    if degenerate {
        log::warn!("start state {x0} is absorbing; the estimate is deterministic");
    }
    let horizon = functional.horizon();
    let rates = functional.rates();
    let values = par::map_range(paths, |k| {
        let mut rng = path_rng(seed, k);
        functional.value(&run_path(&chain, rule, rates, x0, horizon, &mut rng))
    });
    Ok(PathEstimate::from_values(&values, seed, degenerate))
}

/// One-sided Parisian estimate.
pub fn simulate_parisian(
    gen: &Generator,
    prob: &ParisianProblem,
    functional: &Functional,
    x0: usize,
    paths: usize,
    seed: u64,
) -> Result<PathEstimate> {
    simulate(gen, &StoppingRule::parisian(prob), functional, x0, paths, seed)
}

/// Occupancy `P_{x0}[X_t = j]` for every `j`.
pub fn occupancy(gen: &Generator, x0: usize, t: f64, paths: usize, seed: u64) -> Result<Vec<PathEstimate>> {
    let n = gen.dim();
    if x0 >= n || paths < MIN_PATHS || !(t > 0.0) {
        return Err(Error::usage("occupancy needs a valid start, t > 0 and enough paths"));
    }
    let chain = Chain::new(gen);
    let rule = StoppingRule {
        labels: vec![None; n],
        instant: vec![false; n],
        window: f64::INFINITY,
    };
    let ends = par::map_range(paths, |k| {
        let mut rng = path_rng(seed, k);
        run_path(&chain, &rule, None, x0, t, &mut rng).state_at_horizon
    });
    Ok((0..n)
        .map(|j| {
            let v: Vec<f64> = ends.iter().map(|&e| if e == j { 1.0 } else { 0.0 }).collect();
            PathEstimate::from_values(&v, seed, chain.is_absorbing(x0))
        })
        .collect())
}
