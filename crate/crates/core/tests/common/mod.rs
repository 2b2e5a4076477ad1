//! Scenarios shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use parisian_ctmc::extensions::bond::{parisian_bond_prices, ParisianBond};
use parisian_ctmc::extensions::minhit::{min_parisian_hit_prices, MinHit};
use parisian_ctmc::extensions::multisided::{multi_sided_cdf, multi_sided_prices, MultiSided, SetFamily};
use parisian_ctmc::extensions::regime::{rs_parisian_price, RsGenerator, RsPriceRequest};
use parisian_ctmc::mc::{simulate, Functional, PathEstimate, StoppingRule};
use parisian_ctmc::model::{build_preset, default_params, Params, RegimeModel};
use parisian_ctmc::pricing::{parisian_cdf_all, parisian_option_price, Horizon, Inversion, Payoff};
use parisian_ctmc::setup::{Experiment, Quantity};
use parisian_ctmc::{
    Complex64, DriftScheme, ExpmvScheme, Generator, Grid, LaplaceGrid, ParisianProblem, ParisianSolver, Preset, Side,
};

/// One pipeline value paired with its path estimate.
#[derive(Clone, Debug)]
pub struct OracleCase {
    pub name: String,
    pub value: f64,
    pub est: PathEstimate,
}

impl OracleCase {
    pub fn z(&self) -> f64 {
        if self.est.se == 0.0 {
            if (self.value - self.est.mean).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - self.est.mean) / self.est.se
        }
    }

    pub fn agrees(&self) -> bool {
        self.est.agrees(self.value, 3.0)
    }
}

pub const DELIVERABLES: [&str; 7] = ["cdf", "price", "ruin", "bond", "minhit", "rs-price", "multisided"];

pub fn oracle_cases(deliverable: &str, paths: usize, seed: u64) -> Vec<OracleCase> {
    match deliverable {
        "cdf" => cdf_cases(paths, seed),
        "price" => price_cases(paths, seed),
        "ruin" => ruin_cases(paths, seed),
        "bond" => bond_cases(paths, seed),
        "minhit" => minhit_cases(paths, seed),
        "rs-price" => rs_cases(paths, seed),
        "multisided" => multisided_cases(paths, seed),
        _ => panic!("unknown deliverable {deliverable}"),
    }
}

fn experiment_case(
    name: &str,
    e: &Experiment,
    n: usize,
    q: Quantity,
    mc_q: Quantity,
    paths: usize,
    seed: u64,
) -> OracleCase {
    let value = e.evaluate(n, q).unwrap().value;
    let est = e.monte_carlo(n, mc_q, paths, seed).unwrap();
    OracleCase {
        name: name.to_string(),
        value,
        est,
    }
}

fn cdf_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let bm = Experiment::preset(Preset::Bm).unwrap();
    let bs = Experiment::preset(Preset::Bs).unwrap();
    let mut kou = Experiment::preset(Preset::Kou).unwrap();
    kou.maturity = 0.5;
    [
        ("BM L=0 D=1 t=1.5", &bm, 80, 1.5),
        ("BM L=0 D=1 t=3", &bm, 80, 3.0),
        ("BS L=90 D=1/12 t=1", &bs, 101, 1.0),
        ("Kou L=90 D=1/12 t=0.5", &kou, 61, 0.5),
    ]
    .into_iter()
    .map(|(name, e, n, t)| {
        let q = Quantity::Cdf { t };
        experiment_case(name, e, n, q, q, paths, seed)
    })
    .collect()
}

fn price_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    [(Preset::Bs, 101), (Preset::Kou, 61), (Preset::Vg, 61)]
        .into_iter()
        .map(|(p, n)| {
            let e = Experiment::preset(p).unwrap();
            experiment_case(
                &format!("{p:?} down-and-in call n={n}"),
                &e,
                n,
                Quantity::Price,
                Quantity::Price,
                paths,
                seed,
            )
        })
        .collect()
}

fn ruin_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let mut out = Vec::new();

    // absorbing bounds at ±2: by t = 60 every path has been absorbed or ruined
    let mut bm = Experiment::preset(Preset::Bm).unwrap();
    bm.domain = Some((-2.0, 2.0));
    out.push(experiment_case(
        "BM on [-2,2] L=0 D=1 infinite horizon",
        &bm,
        40,
        Quantity::Ruin {
            horizon: Horizon::Infinite { small_q: 1e-8 },
        },
        Quantity::Ruin {
            horizon: Horizon::Finite(60.0),
        },
        paths,
        seed,
    ));

    let params: Params = [("mu".to_string(), -0.3), ("sigma".to_string(), 1.0)].into();
    let mut drift = Experiment::with_params(Preset::Bm, &params).unwrap();
    drift.window = 0.5;
    drift.maturity = 3.0;
    let q = Quantity::Ruin {
        horizon: Horizon::Finite(3.0),
    };
    out.push(experiment_case(
        "BM mu=-0.3 L=0 D=0.5 horizon 3",
        &drift,
        80,
        q,
        q,
        paths,
        seed,
    ));

    let mut up = Experiment::preset(Preset::Bs).unwrap();
    up.side = Side::Above;
    up.barrier = 92.0;
    up.spot = 92.0;
    up.payoff = Payoff::Constant(1.0);
    up.window = 0.1;
    let q = Quantity::Ruin {
        horizon: Horizon::Finite(1.0),
    };
    out.push(experiment_case(
        "BS above L=S0=92 D=0.1 horizon 1",
        &up,
        101,
        q,
        q,
        paths,
        seed,
    ));
    out
}

pub fn cir(n: usize, level: f64) -> (Grid, Generator) {
    let m = build_preset(Preset::Cir, &default_params(Preset::Cir))
        .unwrap()
        .single()
        .unwrap();
    let grid = Grid::barrier_on_grid(0.0, 0.25, level, n).unwrap();
    let g = Generator::build(&m, &grid, DriftScheme::default()).unwrap();
    (grid, g)
}

fn bond_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let (level, window, maturity) = (0.06, 0.25, 3.0);
    let (grid, g) = cir(80, level);
    let nodes = grid.nodes();
    let unit = vec![1.0; nodes.len()];
    let linear: Vec<f64> = nodes.iter().map(|r| 1.0 + 10.0 * r).collect();
    let inv = Inversion::default();
    let prob = ParisianProblem::new(Side::Above, level, window, nodes).unwrap();
    let rule = StoppingRule::parisian(&prob);
    [(0.05, &unit), (0.07, &unit), (0.06, &linear)]
        .into_iter()
        .map(|(r0, f)| {
            let bond = ParisianBond::new(&g, nodes, level, window, f, ExpmvScheme::default()).unwrap();
            let i = grid.nearest(r0);
            let value = parisian_bond_prices(&bond, maturity, &inv).unwrap()[i];
            let functional = Functional::Bond {
                rates: nodes.to_vec(),
                f: f.clone(),
                maturity,
            };
            let est = simulate(&g, &rule, &functional, i, paths, seed).unwrap();
            OracleCase {
                name: format!(
                    "CIR bond r0={:.4} f={}",
                    nodes[i],
                    if f[0] == 1.0 { "1" } else { "1+10r" }
                ),
                value,
                est,
            }
        })
        .collect()
}

pub fn bm(grid: Grid) -> (Grid, Generator) {
    let m = build_preset(Preset::Bm, &default_params(Preset::Bm))
        .unwrap()
        .single()
        .unwrap();
    let g = Generator::build(&m, &grid, DriftScheme::Central).unwrap();
    (grid, g)
}

fn minhit_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let inv = Inversion::default();
    let scenarios = [
        (0.0, 0.2, 0.8, 0.0, 0.2, 0.03),
        (-0.5, 0.3, 0.5, 0.0, f64::NAN, 0.0),
        (0.0, 0.1, 1.2, -0.4, -0.5, 0.05),
    ];
    scenarios
        .into_iter()
        .map(|(level, window, cap, x0, strike, rate)| {
            let (grid, g) = bm(Grid::barrier_on_grid(-3.0, 3.0, level, 60).unwrap());
            let nodes = grid.nodes();
            let f: Vec<f64> = nodes
                .iter()
                .map(|x| if strike.is_nan() { 1.0 } else { (x - strike).max(0.0) })
                .collect();
            let mh = MinHit::new(&g, nodes, level, window, cap, ExpmvScheme::default()).unwrap();
            let i = grid.nearest(x0);
            let value = min_parisian_hit_prices(&g, &mh, &f, 1.0, rate, &inv).unwrap()[i];
            let rule = StoppingRule::min_hit(nodes, level, window, cap);
            let functional = Functional::Payoff { f, maturity: 1.0, rate };
            let est = simulate(&g, &rule, &functional, i, paths, seed).unwrap();
            OracleCase {
                name: format!("BM L={level} D={window} B={cap} x0={:.2}", nodes[i]),
                value,
                est,
            }
        })
        .collect()
}

fn rs_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let mut out = Vec::new();
    for (regime, window) in [(0, 1.0 / 12.0), (1, 1.0 / 12.0), (0, 0.25)] {
        let mut e = Experiment::preset(Preset::RsBs).unwrap();
        e.regime = regime;
        e.window = window;
        out.push(experiment_case(
            &format!("RS-BS regime {regime} D={window:.4} n=61"),
            &e,
            61,
            Quantity::Price,
            Quantity::Price,
            paths,
            seed,
        ));
    }
    out
}

fn multisided_cases(paths: usize, seed: u64) -> Vec<OracleCase> {
    let inv = Inversion::default();
    let inf = f64::INFINITY;
    let mut out = Vec::new();

    let (grid, g) = bm(Grid::uniform(-2.0, 2.0, 60).unwrap());
    let nodes = grid.nodes();
    let fam = SetFamily::from_intervals(nodes, &[(-inf, -0.5), (0.5, inf)]).unwrap();
    let rule = StoppingRule::multi_sided(fam.sets(), 0.2).unwrap();
    let ms = MultiSided::new(&g, fam, 0.2, ExpmvScheme::default()).unwrap();
    let i = grid.nearest(0.0);
    out.push(OracleCase {
        name: "BM double window (-inf,-0.5) (0.5,inf) D=0.2 cdf t=1".into(),
        value: multi_sided_cdf(&ms, 1.0, &inv).unwrap()[i],
        est: simulate(&g, &rule, &Functional::Cdf { t: 1.0 }, i, paths, seed).unwrap(),
    });

    let f: Vec<f64> = nodes.iter().map(|x| x * x).collect();
    out.push(OracleCase {
        name: "BM double window D=0.2 payoff x^2 T=1 r=0.02".into(),
        value: multi_sided_prices(&g, &ms, &f, 1.0, 0.02, &inv).unwrap()[i],
        est: simulate(
            &g,
            &rule,
            &Functional::Payoff {
                f,
                maturity: 1.0,
                rate: 0.02,
            },
            i,
            paths,
            seed,
        )
        .unwrap(),
    });

    let fam = SetFamily::from_intervals(nodes, &[(-inf, -1.0), (-0.3, 0.3), (1.0, inf)]).unwrap();
    let rule = StoppingRule::multi_sided(fam.sets(), 0.15).unwrap();
    let ms = MultiSided::new(&g, fam, 0.15, ExpmvScheme::default()).unwrap();
    let i = grid.nearest(0.6);
    out.push(OracleCase {
        name: format!("BM three windows D=0.15 cdf t=0.8 x0={:.2}", nodes[i]),
        value: multi_sided_cdf(&ms, 0.8, &inv).unwrap()[i],
        est: simulate(&g, &rule, &Functional::Cdf { t: 0.8 }, i, paths, seed).unwrap(),
    });
    out
}

/// Largest `|F(t) - 1{t ≥ D}|` for a chain that starts, and stays, below `L`.
pub fn step_cdf_error() -> f64 {
    let (grid, g) = bm(Grid::uniform(-3.0, 3.0, 40).unwrap());
    let window = 1.0;
    let p = ParisianProblem::new(Side::Below, 10.0, window, grid.nodes()).unwrap();
    let s = ParisianSolver::auto(&g, &p).unwrap();
    let inv = Inversion::default();
    let mut worst: f64 = 0.0;
    for t in [0.25, 0.5, 3.0, 4.0, 6.0] {
        let exact = if t >= window { 1.0 } else { 0.0 };
        for v in parisian_cdf_all(&s, t, &inv).unwrap() {
            worst = worst.max((v - exact).abs());
        }
    }
    worst
}

pub fn sample_qs() -> Vec<Complex64> {
    vec![
        Complex64::new(0.05, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(7.5, 31.4),
        Complex64::new(7.5, -150.0),
        Complex64::new(40.0, 600.0),
    ]
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Fast birth-death path against the dense path on tridiagonal chains.
pub fn fast_vs_dense() -> f64 {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for side in [Side::Below, Side::Above] {
        let mut e = Experiment::preset(Preset::Bs).unwrap();
        e.side = side;
        let b = e.build(211).unwrap();
        cases.push((b.chain.generator().clone(), b.problem.clone(), b.payoff.clone()));
    }
    let (grid, g) = bm(Grid::barrier_on_grid(-3.0, 3.0, 0.4, 120).unwrap());
    let p = ParisianProblem::new(Side::Below, 0.4, 0.3, grid.nodes()).unwrap();
    let f: Vec<f64> = grid.nodes().iter().map(|x| x.max(0.0)).collect();
    cases.push((g, p, f));
    for (g, p, f) in cases {
        let fast = ParisianSolver::birth_death(&g, &p, ExpmvScheme::default()).unwrap();
        let dense = ParisianSolver::dense(&g, &p, ExpmvScheme::default()).unwrap();
        let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::from(v)).collect();
        for q in sample_qs() {
            worst = worst.max(max_diff(&fast.h(q).unwrap(), &dense.h(q).unwrap()));
            worst = worst.max(max_diff(&fast.apply(q, &fc).unwrap(), &dense.apply(q, &fc).unwrap()));
        }
    }
    worst
}

/// Multi-sided transform with one set against the one-sided solver.
pub fn single_set_reduction() -> f64 {
    let mut worst: f64 = 0.0;
    for preset in [Preset::Bs, Preset::Kou] {
        let e = Experiment::preset(preset).unwrap();
        let b = e.build(81).unwrap();
        let g = b.chain.generator();
        let nodes = b.grid.nodes();
        let l = b.problem.barrier;
        let fam = SetFamily::from_masks(vec![b.problem.excursion_mask().to_vec()]).unwrap();
        let ms = MultiSided::new(g, fam, e.window, ExpmvScheme::default()).unwrap();
        let dense = ParisianSolver::dense(g, &b.problem, ExpmvScheme::default()).unwrap();
        assert!(nodes
            .iter()
            .zip(b.problem.excursion_mask())
            .all(|(x, &m)| m == (*x < l)));
        for q in sample_qs() {
            let a = ms.matrix(q).unwrap();
            let d = dense.at(q).unwrap().matrix().unwrap();
            worst = worst.max((a - d).iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Regime-switching price with one regime against the single-model price.
pub fn single_regime_reduction() -> f64 {
    let e = Experiment::preset(Preset::Bs).unwrap();
    let spec = e.model.clone().single().unwrap();
    let b = e.build(121).unwrap();
    let g = b.chain.generator();
    let rm = RegimeModel::new(vec![spec], vec![vec![0.0]]).unwrap();
    let rs = RsGenerator::build(&rm, &b.grid, e.drift).unwrap();
    let inv = Inversion::default();
    let start = b.start.unwrap();
    let req = RsPriceRequest {
        side: Side::Below,
        barrier: e.barrier,
        window: e.window,
        payoff: e.payoff,
        maturity: e.maturity,
        rate: e.rate,
        node: start,
        regime: 0,
    };
    let a = rs_parisian_price(&rs, &req, &inv, ExpmvScheme::default()).unwrap();
    let dense = ParisianSolver::dense(g, &b.problem, ExpmvScheme::default()).unwrap();
    let v = parisian_option_price(g, &dense, &b.payoff, e.maturity, e.rate, start, &inv).unwrap();
    (a - v).abs()
}

/// Closed-form inversion pairs `1/q`, `1/(q+1)`, `e^{-qD}/q`.
pub fn laplace_pairs() -> f64 {
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let lg = LaplaceGrid::with_defaults(t).unwrap();
        let one = lg.invert(|q| Ok(1.0 / q)).unwrap();
        let exp = lg.invert(|q| Ok(1.0 / (q + 1.0))).unwrap();
        worst = worst.max((one - 1.0).abs()).max((exp - (-t).exp()).abs());
    }
    let d = 1.0;
    for t in [0.25, 0.5, 3.0, 5.0] {
        let lg = LaplaceGrid::with_defaults(t).unwrap();
        let step = lg.invert(|q| Ok((-q * d).exp() / q)).unwrap();
        worst = worst.max((step - if t >= d { 1.0 } else { 0.0 }).abs());
    }
    worst
}

/// Generators covered by the structural checks.
pub fn generators() -> Vec<(String, Generator)> {
    let mut out = Vec::new();
    for (p, n) in [
        (Preset::Bs, 211),
        (Preset::Kou, 211),
        (Preset::Vg, 255),
        (Preset::RsBs, 121),
    ] {
        let b = Experiment::preset(p).unwrap().build(n).unwrap();
        out.push((format!("{p:?} n={n}"), b.chain.generator().clone()));
    }
    out.push(("BM n=80".into(), bm(Grid::uniform(-3.0, 3.0, 80).unwrap()).1));
    out.push(("CIR n=80".into(), cir(80, 0.06).1));
    out
}

pub fn max_row_residual() -> f64 {
    generators()
        .iter()
        .map(|(_, g)| g.row_diagnostics().max_row_residual)
        .fold(0.0, f64::max)
}

/// Solvers on which the transform invariants are checked.
pub fn solvers() -> Vec<(String, ParisianSolver, Vec<bool>)> {
    let mut out = Vec::new();
    for (p, n) in [
        (Preset::Bs, 121),
        (Preset::Kou, 81),
        (Preset::Vg, 81),
        (Preset::RsBs, 61),
    ] {
        let e = Experiment::preset(p).unwrap();
        let b = e.build(n).unwrap();
        let s = ParisianSolver::dense(b.chain.generator(), &b.problem, ExpmvScheme::default()).unwrap();
        out.push((format!("{p:?} n={n}"), s, b.problem.excursion_mask().to_vec()));
    }
    let mut e = Experiment::preset(Preset::Bs).unwrap();
    e.side = Side::Above;
    e.barrier = 95.0;
    let b = e.build(121).unwrap();
    out.push((
        "BS above n=121 (birth-death)".into(),
        ParisianSolver::birth_death(b.chain.generator(), &b.problem, ExpmvScheme::default()).unwrap(),
        b.problem.excursion_mask().to_vec(),
    ));
    let (grid, g) = bm(Grid::barrier_on_grid(-3.0, 3.0, 0.0, 80).unwrap());
    let p = ParisianProblem::new(Side::Below, 0.0, 1.0, grid.nodes()).unwrap();
    out.push((
        "BM L=0 D=1 (birth-death)".into(),
        ParisianSolver::birth_death(&g, &p, ExpmvScheme::default()).unwrap(),
        p.excursion_mask().to_vec(),
    ));
    out
}

/// Largest entry of `H(q)` in a column outside the excursion set.
pub fn max_outside_column(s: &ParisianSolver, mask: &[bool]) -> f64 {
    let mut worst: f64 = 0.0;
    for q in sample_qs() {
        let h = s.at(q).unwrap().matrix().unwrap();
        for (j, &inside) in mask.iter().enumerate() {
            if !inside {
                worst = worst.max(h.column(j).iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }
    worst
}

pub const REAL_QS: [f64; 9] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0];

/// `(worst excursion outside [0, 1], worst increase)` of `h(q, x)` over [`REAL_QS`].
pub fn h_bounds_and_monotonicity(s: &ParisianSolver) -> (f64, f64) {
    let mut out_of_range: f64 = 0.0;
    let mut increase: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    for q in REAL_QS {
        let h = s.h_real(q).unwrap();
        for &v in &h {
            out_of_range = out_of_range.max(-v).max(v - 1.0);
        }
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&h) {
                increase = increase.max(b - a);
            }
        }
        prev = Some(h);
    }
    (out_of_range.max(0.0), increase.max(0.0))
}

pub const CDF_TIMES: [f64; 8] = [0.05, 0.1, 0.2, 0.4, 0.8, 1.2, 2.0, 3.0];

/// Worst decrease of `t ↦ P[τ ≤ t]` over [`CDF_TIMES`], all states.
pub fn cdf_worst_decrease(s: &ParisianSolver) -> f64 {
    let inv = Inversion::default();
    let mut worst: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    for t in CDF_TIMES {
        let c = parisian_cdf_all(s, t, &inv).unwrap();
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&c) {
                worst = worst.max(a - b);
            }
        }
        prev = Some(c);
    }
    worst
}
