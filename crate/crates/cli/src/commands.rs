//! Subcommand implementations. Each returns a CSV table.

use std::time::Instant;

use log::warn;
use parisian_ctmc::extensions::bond::{parisian_bond_prices, ParisianBond};
use parisian_ctmc::extensions::minhit::{min_parisian_hit_prices, MinHit};
use parisian_ctmc::extensions::multisided::{multi_sided_cdf, multi_sided_prices, MultiSided, SetFamily};
use parisian_ctmc::mc::{simulate, Functional, PathEstimate, StoppingRule};
use parisian_ctmc::pricing::{richardson_extrapolate, Horizon, Payoff};
use parisian_ctmc::setup::{Built, Evaluation, Experiment, Quantity};
use parisian_ctmc::{Generator, Grid, Model, ParisianProblem, Side};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

const LEVEL_HEADER: [&str; 5] = ["n", "delta_max", "value", "extrapolated", "runtime_ms"];
const CDF_HEADER: [&str; 6] = ["t", "n", "delta_max", "value", "extrapolated", "runtime_ms"];
const DEFAULT_PATHS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Cdf,
    Price,
    Ruin,
    Bond,
    MinHit,
    RsPrice,
    MultiSided,
    Convergence,
    Mc,
}

/// Overrides for the `mc` subcommand.
#[derive(Clone, Copy, Debug, Default)]
pub struct McOverrides {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
}

pub fn run(kind: Kind, cfg: &RunConfig, mc: McOverrides) -> CliResult<Table> {
    match kind {
        Kind::Cdf => cdf(cfg),
        Kind::Price => price(cfg, false),
        Kind::RsPrice => price(cfg, true),
        Kind::Ruin => ruin(cfg),
        Kind::Bond => bond(cfg),
        Kind::MinHit => minhit(cfg),
        Kind::MultiSided => multisided(cfg),
        Kind::Convergence => convergence(cfg),
        Kind::Mc => monte_carlo(cfg, mc),
    }
}

/// Grid and generator of the base run, for the dump flags.
pub fn chain(kind: Kind, cfg: &RunConfig) -> CliResult<(Grid, Generator)> {
    let n = cfg.n()?;
    if kind == Kind::Bond || (kind == Kind::Mc && target(cfg)? == "bond") {
        let b = BondSetup::new(cfg, n)?;
        return Ok((b.grid, b.gen));
    }
    let b = cfg.experiment()?.build(n)?;
    Ok((b.grid, b.chain.generator().clone()))
}

fn timed<T>(f: impl FnOnce() -> CliResult<T>) -> CliResult<(T, f64)> {
    let t0 = Instant::now();
    let v = f()?;
    Ok((v, t0.elapsed().as_secs_f64() * 1e3))
}

/// Row `n, delta_max, value, extrapolated, runtime_ms`. The extrapolated
/// value pairs the run with a coarse run at `(n + 1) / 2`.
fn level_row(cfg: &RunConfig, n: usize, eval: impl Fn(usize) -> CliResult<Evaluation>) -> CliResult<Vec<Cell>> {
    let fine = eval(n)?;
    let extrapolated = if cfg.extrapolation() && cfg.blocks()?.is_none() {
        let coarse = eval(n.div_ceil(2))?;
        richardson_extrapolate(&[(coarse.delta_max, coarse.value), (fine.delta_max, fine.value)]).ok()
    } else {
        None
    };
    Ok(vec![
        fine.n.into(),
        fine.delta_max.into(),
        fine.value.into(),
        extrapolated.into(),
        Cell::Millis(fine.runtime_ms),
    ])
}

fn price(cfg: &RunConfig, regime: bool) -> CliResult<Table> {
    let e = cfg.experiment()?;
    if regime && !matches!(e.model, Model::Regime(_)) {
        return Err(CliError::config(
            "model.type",
            "rs-price needs a regime-switching model (RS_BS or model.regimes)",
        ));
    }
    let mut t = Table::new(&LEVEL_HEADER);
    t.push(level_row(cfg, cfg.n()?, |n| Ok(e.evaluate(n, Quantity::Price)?))?);
    Ok(t)
}

fn warn_near_window(t: f64, window: f64) {
    if (t - window).abs() < 0.01 * window {
        warn!("t = {t} is within 1% of D = {window}; the CDF jumps there and the inversion carries Gibbs error");
    }
}

fn cdf(cfg: &RunConfig) -> CliResult<Table> {
    let e = cfg.experiment()?;
    let n = cfg.n()?;
    let mut table = Table::new(&CDF_HEADER);
    for t in cfg.times()? {
        warn_near_window(t, e.window);
        let mut row = vec![Cell::Num(t)];
        row.extend(level_row(cfg, n, |n| Ok(e.evaluate(n, Quantity::Cdf { t })?))?);
        table.push(row);
    }
    Ok(table)
}

fn ruin(cfg: &RunConfig) -> CliResult<Table> {
    let e = cfg.experiment()?;
    let n = cfg.n()?;
    let horizon = cfg.horizon()?;
    let mut t = Table::new(&LEVEL_HEADER);
    let row = level_row(cfg, n, |n| Ok(e.evaluate(n, Quantity::Ruin { horizon })?))?;
    if let (Horizon::Infinite { small_q }, Cell::Num(v)) = (horizon, &row[2]) {
        let tenth = e.evaluate(
            n,
            Quantity::Ruin {
                horizon: Horizon::Infinite {
                    small_q: small_q / 10.0,
                },
            },
        )?;
        eprintln!(
            "ruin sensitivity: h({small_q:e}) = {v}, h({:e}) = {}, difference {:e}",
            small_q / 10.0,
            tenth.value,
            (tenth.value - v).abs()
        );
    }
    t.push(row);
    Ok(t)
}

fn quantity(cfg: &RunConfig) -> CliResult<Quantity> {
    match cfg.study.quantity.as_deref().unwrap_or("price") {
        "price" => Ok(Quantity::Price),
        "cdf" => Ok(Quantity::Cdf { t: cfg.times()?[0] }),
        "ruin" => Ok(Quantity::Ruin {
            horizon: cfg.horizon()?,
        }),
        other => Err(CliError::config(
            "study.quantity",
            format!("unknown quantity `{other}` (expected price, cdf or ruin)"),
        )),
    }
}

fn convergence(cfg: &RunConfig) -> CliResult<Table> {
    let e = cfg.experiment()?;
    let ladder = cfg.ladder()?;
    let study = e.study(&ladder, quantity(cfg)?, cfg.study.reference)?;
    let mut t = Table::new(&[
        "n",
        "delta_max",
        "value",
        "extrapolated",
        "abs_err_vs_reference",
        "runtime_ms",
        "fitted_order",
    ]);
    let extrapolate = cfg.extrapolation();
    for r in &study.rows {
        t.push(vec![
            r.eval.n.into(),
            r.eval.delta_max.into(),
            r.eval.value.into(),
            r.extrapolated.filter(|_| extrapolate).into(),
            r.abs_err.into(),
            Cell::Millis(r.eval.runtime_ms),
            study.order.into(),
        ]);
    }
    Ok(t)
}

fn require_single(e: &Experiment, cmd: &str) -> CliResult<()> {
    match e.model {
        Model::Single(_) => Ok(()),
        Model::Regime(_) => Err(CliError::config(
            "model.type",
            format!("{cmd} needs a single-regime model"),
        )),
    }
}

fn require_above(cfg: &RunConfig, cmd: &str) -> CliResult<()> {
    match cfg
        .parisian
        .side
        .as_deref()
        .map(crate::config::parse_side)
        .transpose()?
    {
        None | Some(Side::Above) => Ok(()),
        Some(Side::Below) => Err(CliError::config(
            "parisian.side",
            format!("{cmd} uses excursions above L"),
        )),
    }
}

/// Value at the start from per-node values.
fn at_start(e: &Experiment, b: &Built, values: &[f64]) -> CliResult<f64> {
    let (x0, _, _) = e.chain_coords()?;
    Ok(b.grid.interpolate(values, x0))
}

fn start_state(grid: &Grid, x: f64) -> usize {
    grid.index_of(x).unwrap_or_else(|| {
        let i = grid.nearest(x);
        warn!(
            "start {x} is not a grid node; simulating from the nearest node {}",
            grid.nodes()[i]
        );
        i
    })
}

struct BondSetup {
    grid: Grid,
    gen: Generator,
    level: f64,
    window: f64,
    payoff: Vec<f64>,
    r0: f64,
    maturity: f64,
}

impl BondSetup {
    fn new(cfg: &RunConfig, n: usize) -> CliResult<Self> {
        require_above(cfg, "bond")?;
        if cfg.blocks()?.is_some() {
            return Err(CliError::config("grid.n1", "bond grids take a single budget grid.n"));
        }
        let spec = cfg
            .model()?
            .single()
            .map_err(|_| CliError::config("model.type", "bond needs a single-regime short-rate model"))?;
        let level = cfg
            .parisian
            .level
            .ok_or_else(|| CliError::config("parisian.L", "the bond needs a rate level"))?;
        let window = cfg
            .parisian
            .window
            .ok_or_else(|| CliError::config("parisian.D", "the bond needs a window"))?;
        let r0 = cfg
            .option
            .spot
            .ok_or_else(|| CliError::config("option.S0", "the bond needs the initial short rate"))?;
        let maturity = cfg.option.maturity.unwrap_or(1.0);
        if !(maturity > 0.0) {
            return Err(CliError::config("option.T", "maturity must be positive"));
        }
        let (lo, hi) = match (cfg.grid.l, cfg.grid.r) {
            (Some(l), Some(r)) => (l, r),
            (None, None) => (0.0, (5.0 * r0.max(level)).max(0.25)),
            _ => return Err(CliError::config("grid.l", "grid.l and grid.r must be given together")),
        };
        if !(lo < r0 && r0 < hi) {
            return Err(CliError::config(
                "option.S0",
                format!("{r0} lies outside the domain ({lo}, {hi})"),
            ));
        }
        let grid = Grid::barrier_on_grid(lo, hi, level, n)?;
        let gen = Generator::build(&spec, &grid, cfg.drift()?)?;
        let payoff = cfg
            .payoff(Payoff::Constant(1.0))?
            .on_nodes(grid.nodes(), spec.state_transform);
        Ok(BondSetup {
            grid,
            gen,
            level,
            window,
            payoff,
            r0,
            maturity,
        })
    }
}

fn bond(cfg: &RunConfig) -> CliResult<Table> {
    let inv = cfg.inversion()?;
    let scheme = cfg.experiment()?.scheme;
    let eval = |n: usize| {
        let ((value, delta_max), runtime_ms) = timed(|| {
            let b = BondSetup::new(cfg, n)?;
            let bond = ParisianBond::new(&b.gen, b.grid.nodes(), b.level, b.window, &b.payoff, scheme)?;
            let prices = parisian_bond_prices(&bond, b.maturity, &inv)?;
            Ok((b.grid.interpolate(&prices, b.r0), b.grid.max_step()))
        })?;
        Ok(Evaluation {
            n,
            delta_max,
            value,
            runtime_ms,
        })
    };
    let mut t = Table::new(&LEVEL_HEADER);
    t.push(level_row(cfg, cfg.n()?, eval)?);
    Ok(t)
}

fn cap(cfg: &RunConfig, e: &Experiment) -> CliResult<f64> {
    let b = cfg
        .minhit
        .cap
        .ok_or_else(|| CliError::config("minhit.B", "the upper barrier is required"))?;
    let x = e.model.state_transform().inverse(b);
    if !(x.is_finite() && x > e.chain_coords()?.1) {
        return Err(CliError::config("minhit.B", "must lie above the Parisian level L"));
    }
    Ok(x)
}

fn minhit(cfg: &RunConfig) -> CliResult<Table> {
    require_above(cfg, "minhit")?;
    let e = cfg.experiment()?;
    require_single(&e, "minhit")?;
    let b_cap = cap(cfg, &e)?;
    let (_, l, _) = e.chain_coords()?;
    let eval = |n: usize| {
        let ((value, delta_max), runtime_ms) = timed(|| {
            let b = e.build(n)?;
            let g = b.chain.generator();
            let mh = MinHit::new(g, b.grid.nodes(), l, e.window, b_cap, e.scheme)?;
            let prices = min_parisian_hit_prices(g, &mh, &b.payoff, e.maturity, e.rate, &e.inversion)?;
            Ok((at_start(&e, &b, &prices)?, b.grid.max_step()))
        })?;
        Ok(Evaluation {
            n,
            delta_max,
            value,
            runtime_ms,
        })
    };
    let mut t = Table::new(&LEVEL_HEADER);
    t.push(level_row(cfg, cfg.n()?, eval)?);
    Ok(t)
}

fn multisided_window(cfg: &RunConfig, e: &Experiment) -> f64 {
    cfg.multisided.window.unwrap_or(e.window)
}

fn family(cfg: &RunConfig, e: &Experiment, nodes: &[f64]) -> CliResult<SetFamily> {
    if cfg.multisided.sets.is_empty() {
        return Err(CliError::config("multisided.sets", "at least one set is required"));
    }
    let tr = e.model.state_transform();
    let intervals: Vec<(f64, f64)> = cfg
        .multisided
        .sets
        .iter()
        .map(|[lo, hi]| {
            (
                lo.map_or(f64::NEG_INFINITY, |v| tr.inverse(v)),
                hi.map_or(f64::INFINITY, |v| tr.inverse(v)),
            )
        })
        .collect();
    Ok(SetFamily::from_intervals(nodes, &intervals)?)
}

fn multisided_is_cdf(cfg: &RunConfig) -> CliResult<bool> {
    match cfg.multisided.quantity.as_deref().unwrap_or("cdf") {
        "cdf" => Ok(true),
        "price" => Ok(false),
        other => Err(CliError::config(
            "multisided.quantity",
            format!("unknown quantity `{other}` (expected cdf or price)"),
        )),
    }
}

fn multisided(cfg: &RunConfig) -> CliResult<Table> {
    let e = cfg.experiment()?;
    require_single(&e, "multisided")?;
    let window = multisided_window(cfg, &e);
    let eval = |n: usize, t: Option<f64>| {
        let ((value, delta_max), runtime_ms) = timed(|| {
            let b = e.build(n)?;
            let g = b.chain.generator();
            let ms = MultiSided::new(g, family(cfg, &e, b.grid.nodes())?, window, e.scheme)?;
            let all = match t {
                Some(t) => multi_sided_cdf(&ms, t, &e.inversion)?,
                None => multi_sided_prices(g, &ms, &b.payoff, e.maturity, e.rate, &e.inversion)?,
            };
            Ok((at_start(&e, &b, &all)?, b.grid.max_step()))
        })?;
        Ok(Evaluation {
            n,
            delta_max,
            value,
            runtime_ms,
        })
    };
    let n = cfg.n()?;
    if multisided_is_cdf(cfg)? {
        let mut table = Table::new(&CDF_HEADER);
        for t in cfg.times()? {
            warn_near_window(t, window);
            let mut row = vec![Cell::Num(t)];
            row.extend(level_row(cfg, n, |n| eval(n, Some(t)))?);
            table.push(row);
        }
        Ok(table)
    } else {
        let mut table = Table::new(&LEVEL_HEADER);
        table.push(level_row(cfg, n, |n| eval(n, None))?);
        Ok(table)
    }
}

fn target(cfg: &RunConfig) -> CliResult<&str> {
    let t = cfg.mc.target.as_deref().unwrap_or("price");
    match t {
        "price" | "cdf" | "ruin" | "bond" | "minhit" | "multisided" => Ok(t),
        other => Err(CliError::config(
            "mc.target",
            format!("unknown target `{other}` (expected price, cdf, ruin, bond, minhit or multisided)"),
        )),
    }
}

fn monte_carlo(cfg: &RunConfig, o: McOverrides) -> CliResult<Table> {
    let paths = o.paths.or(cfg.mc.paths).unwrap_or(DEFAULT_PATHS);
    let seed = o.seed.or(cfg.mc.seed).unwrap_or(0);
    let n = cfg.n()?;
    let est: PathEstimate = match target(cfg)? {
        "price" => cfg.experiment()?.monte_carlo(n, Quantity::Price, paths, seed)?,
        "cdf" => cfg
            .experiment()?
            .monte_carlo(n, Quantity::Cdf { t: cfg.times()?[0] }, paths, seed)?,
        "ruin" => cfg.experiment()?.monte_carlo(
            n,
            Quantity::Ruin {
                horizon: cfg.horizon()?,
            },
            paths,
            seed,
        )?,
        "bond" => {
            let b = BondSetup::new(cfg, n)?;
            let nodes = b.grid.nodes();
            let prob = ParisianProblem::new(Side::Above, b.level, b.window, nodes)?;
            let f = Functional::Bond {
                rates: nodes.to_vec(),
                f: b.payoff.clone(),
                maturity: b.maturity,
            };
            simulate(
                &b.gen,
                &StoppingRule::parisian(&prob),
                &f,
                start_state(&b.grid, b.r0),
                paths,
                seed,
            )?
        }
        "minhit" => {
            require_above(cfg, "minhit")?;
            let e = cfg.experiment()?;
            require_single(&e, "minhit")?;
            let b_cap = cap(cfg, &e)?;
            let (x0, l, _) = e.chain_coords()?;
            let b = e.build(n)?;
            let rule = StoppingRule::min_hit(b.grid.nodes(), l, e.window, b_cap);
            let f = Functional::Payoff {
                f: b.payoff.clone(),
                maturity: e.maturity,
                rate: e.rate,
            };
            simulate(b.chain.generator(), &rule, &f, start_state(&b.grid, x0), paths, seed)?
        }
        _ => {
            let e = cfg.experiment()?;
            require_single(&e, "multisided")?;
            let (x0, _, _) = e.chain_coords()?;
            let b = e.build(n)?;
            let fam = family(cfg, &e, b.grid.nodes())?;
            let rule = StoppingRule::multi_sided(fam.sets(), multisided_window(cfg, &e))?;
            let f = if multisided_is_cdf(cfg)? {
                Functional::Cdf { t: cfg.times()?[0] }
            } else {
                Functional::Payoff {
                    f: b.payoff.clone(),
                    maturity: e.maturity,
                    rate: e.rate,
                }
            };
            simulate(b.chain.generator(), &rule, &f, start_state(&b.grid, x0), paths, seed)?
        }
    };
    let mut t = Table::new(&["estimate", "se", "paths", "seed"]);
    t.push(vec![
        est.mean.into(),
        est.se.into(),
        est.paths.into(),
        Cell::Int(est.seed),
    ]);
    Ok(t)
}
