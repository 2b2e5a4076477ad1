mod common;

use parisian_ctmc::model::{build_preset, Params};
use parisian_ctmc::pricing::{parisian_cdf_all, Inversion};
use parisian_ctmc::{
    Complex64, DriftScheme, ExpmvScheme, Generator, Grid, ParisianProblem, ParisianSolver, Preset, Side,
};
use proptest::prelude::*;

#[test]
fn generator_rows_sum_to_zero() {
    for (name, g) in common::generators() {
        let d = g.row_diagnostics();
        assert!(d.is_valid(), "{name}: {d}");
    }
}

#[test]
fn transforms_vanish_on_columns_outside_the_excursion_set() {
    for (name, s, mask) in common::solvers() {
        let worst = common::max_outside_column(&s, &mask);
        assert!(worst <= 1e-14, "{name}: {worst:e}");
    }
}

#[test]
fn h_is_a_bounded_decreasing_function_of_q() {
    for (name, s, _) in common::solvers() {
        let (range, increase) = common::h_bounds_and_monotonicity(&s);
        assert!(range <= 1e-10 && increase <= 1e-10, "{name}: {range:e} {increase:e}");
    }
}

#[test]
fn cdf_is_nondecreasing_in_t() {
    for (name, s, _) in common::solvers() {
        let worst = common::cdf_worst_decrease(&s);
        assert!(worst <= 1e-6, "{name}: {worst:e}");
    }
}

fn bm_solver(mu: f64, sigma: f64, level: f64, window: f64, side: Side) -> (Grid, ParisianSolver) {
    let params: Params = [("mu".to_string(), mu), ("sigma".to_string(), sigma)].into();
    let m = build_preset(Preset::Bm, &params).unwrap().single().unwrap();
    let grid = Grid::barrier_on_grid(-4.0, 4.0, level, 60).unwrap();
    let g = Generator::build(&m, &grid, DriftScheme::default()).unwrap();
    let p = ParisianProblem::new(side, level, window, grid.nodes()).unwrap();
    let s = ParisianSolver::auto(&g, &p).unwrap();
    (grid, s)
}

fn side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Below), Just(Side::Above)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn h_in_unit_interval_and_monotone(
        mu in -1.0f64..1.0,
        sigma in 0.3f64..2.0,
        level in -1.5f64..1.5,
        window in 0.05f64..2.0,
        side in side(),
        q1 in 0.01f64..20.0,
        dq in 0.0f64..20.0,
    ) {
        let (_, s) = bm_solver(mu, sigma, level, window, side);
        let a = s.h_real(q1).unwrap();
        let b = s.h_real(q1 + dq).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x >= -1e-10 && *x <= 1.0 + 1e-10);
            prop_assert!(*y <= *x + 1e-10);
        }
    }

    #[test]
    fn outside_columns_vanish(
        level in -1.5f64..1.5,
        window in 0.05f64..2.0,
        side in side(),
        re in 0.01f64..20.0,
        im in -200.0f64..200.0,
    ) {
        let (grid, s) = bm_solver(0.2, 1.0, level, window, side);
        let p = ParisianProblem::new(side, level, window, grid.nodes()).unwrap();
        let h = s.at(Complex64::new(re, im)).unwrap().matrix().unwrap();
        for (j, &inside) in p.excursion_mask().iter().enumerate() {
            if !inside {
                prop_assert!(h.column(j).iter().all(|v| v.norm() <= 1e-14));
            }
        }
    }

    #[test]
    fn cdf_monotone_in_t(
        mu in -1.0f64..1.0,
        level in -1.0f64..1.0,
        window in 0.1f64..1.0,
        t in 0.05f64..3.0,
        dt in 0.01f64..1.0,
    ) {
        let (_, s) = bm_solver(mu, 1.0, level, window, Side::Below);
        let inv = Inversion::default();
        let a = parisian_cdf_all(&s, t, &inv).unwrap();
        let b = parisian_cdf_all(&s, t + dt, &inv).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*y >= *x - 1e-6);
        }
    }
}

#[test]
fn dense_and_fast_solvers_share_the_scheme() {
    let (grid, s) = bm_solver(0.0, 1.0, 0.0, 1.0, Side::Below);
    let p = ParisianProblem::new(Side::Below, 0.0, 1.0, grid.nodes()).unwrap();
    let params: Params = [("mu".to_string(), 0.0), ("sigma".to_string(), 1.0)].into();
    let m = build_preset(Preset::Bm, &params).unwrap().single().unwrap();
    let g = Generator::build(&m, &grid, DriftScheme::default()).unwrap();
    let d = ParisianSolver::dense(&g, &p, ExpmvScheme::default()).unwrap();
    let q = Complex64::new(2.0, 5.0);
    assert!(common::max_diff(&s.h(q).unwrap(), &d.h(q).unwrap()) <= 1e-10);
}
