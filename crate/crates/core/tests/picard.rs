mod common;

use hilfer::certifier::{estimate_constants, Budget};
use hilfer::error::Error;
use hilfer::grid::Grid;
use hilfer::picard::{apply_f, eval_delay, solve_mild, solve_mild_from, weighted_norm, DelayValue, MildOperator};
use hilfer::problem::{DelaySpec, NonlinSpec, NonlocalSpec, Problem};
use hilfer::solution_ops::f_operator_weighted;
use hilfer::trajectory::Trajectory;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

#[test]
fn weighted_norm_examples() {
    let g = Grid::uniform(0.0, 1.0, 16).unwrap();
    let c = Trajectory::from_fn(g.clone(), 1.0, v(&[3.0, 4.0]), |_| v(&[3.0, 4.0])).unwrap();
    assert_eq!(weighted_norm(&c), 5.0);
    assert_eq!(weighted_norm(&Trajectory::zeros(g.clone(), 2, 0.5).unwrap()), 0.0);
    // xi(t) = t^(-1/2) v with weight t^(1/2)
    let s = Trajectory::from_fn(g, 0.5, v(&[0.6, 0.8]), |t| v(&[0.6, 0.8]) / t.sqrt()).unwrap();
    assert!((weighted_norm(&s) - 1.0).abs() < 1e-15);
}

#[test]
fn delay_reads() {
    let g = Grid::uniform(0.0, 2.0, 8).unwrap();
    let tr = Trajectory::from_fn(g.clone(), 1.0, v(&[0.0]), |t| v(&[t * t])).unwrap();
    let at = |d: &DelaySpec, s: f64| match eval_delay(&tr, d, s).unwrap() {
        DelayValue::Value(x) => x[0],
        DelayValue::Singular { .. } => panic!("singular"),
    };
    assert_eq!(at(&DelaySpec::Identity, 1.25), 1.5625);
    assert_eq!(at(&DelaySpec::Proportional { q: 0.5 }, 2.0), 1.0);

    // 3-node grid, sigma between nodes: convex combination of weighted values
    let g3 = Grid::uniform(0.0, 2.0, 2).unwrap();
    let tr3 = Trajectory::new(g3, vec![v(&[2.0]), v(&[4.0]), v(&[10.0])], 0.5).unwrap();
    let tab = DelaySpec::Tabulated { t: vec![0.0, 2.0], sigma: vec![0.0, 1.5] };
    // sigma(1.6) = 1.2, weighted value 4 + 0.2 * 6 = 5.2, weight 1.2^(1/2)
    match eval_delay(&tr3, &tab, 1.6).unwrap() {
        DelayValue::Value(x) => assert!((x[0] - 5.2 / 1.2f64.sqrt()).abs() < 1e-14),
        other => panic!("{other:?}"),
    }
    assert!(matches!(eval_delay(&tr3, &DelaySpec::Lag { tau: 5.0 }, 1.0).unwrap(), DelayValue::Singular { .. }));
}

fn scalar_problem(alpha: f64, beta: f64, a0: f64, nonlin: NonlinSpec, xi0: f64) -> Problem {
    let mut p = common::classical(DMatrix::from_element(1, 1, a0), nonlin, &[xi0], 1.0);
    p.alpha = alpha;
    p.beta = beta;
    p
}

#[test]
fn map_is_constant_without_nonlinear_terms() {
    let p = scalar_problem(0.6, 0.4, 1.0, NonlinSpec::Zero, 1.0);
    let grid = p.grid(32).unwrap();
    let op = MildOperator::new(&p, &grid, 1e-12).unwrap();
    let h = op.homogeneous().unwrap();
    let junk = Trajectory::from_fn(grid.clone(), p.gamma(), v(&[7.0]), |t| v(&[t.sin() * 5.0])).unwrap();
    assert_eq!(op.apply(&junk).unwrap(), h);
    let (x, d) = solve_mild(&p, &grid, TOL, 10).unwrap();
    assert_eq!(d.iterations, 1);
    assert_eq!(x, h);
}

#[test]
fn nonlocal_term_vanishes_on_zero_input() {
    let mut p = scalar_problem(0.5, 0.5, 1.0, NonlinSpec::Zero, 1.0);
    p.nonlocal = NonlocalSpec::single(1.0, 1.0, 1);
    let grid = p.grid(16).unwrap();
    let out = apply_f(&Trajectory::zeros(grid.clone(), 1, p.gamma()).unwrap(), &p, 1e-12).unwrap();
    for (i, t) in grid.nodes().iter().enumerate() {
        let f = f_operator_weighted(&p.gen, 0.5, 0.5, *t, 1e-12).unwrap();
        assert!((out.weighted_values[i][0] - f[(0, 0)]).abs() < 1e-14);
    }
}

#[test]
fn classical_sine_on_zero_input() {
    let p = scalar_problem(1.0, 1.0, 1.0, NonlinSpec::Sine { kappa: 0.1 }, 2.0);
    let grid = p.grid(64).unwrap();
    let out = apply_f(&Trajectory::zeros(grid.clone(), 1, 1.0).unwrap(), &p, 1e-12).unwrap();
    for (i, t) in grid.nodes().iter().enumerate() {
        assert!((out.weighted_values[i][0] - 2.0 * (-t).exp()).abs() < 1e-14);
    }
}

#[test]
fn classical_nonlinear_solution_against_rk4() {
    let p = scalar_problem(1.0, 1.0, 0.5, NonlinSpec::Sine { kappa: 0.4 }, 1.0);
    let grid = p.grid(1024).unwrap();
    let (x, _) = solve_mild(&p, &grid, 1e-12, 100).unwrap();
    let oracle = common::rk4(|_, y| y * -0.5 + y.map(|u| 0.4 * u.sin()), v(&[1.0]), 1.0, 1024, 4);
    let err = x.weighted_values.iter().zip(&oracle).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn demo_iteration() {
    let p = common::demo();
    let grid = p.default_grid().unwrap();
    let (x, d) = solve_mild(&p, &grid, TOL, 200).unwrap();
    assert!(d.ratios.iter().skip(1).all(|r| *r <= 0.65));
    assert!(apply_f(&x, &p, p.numerics.ml_tol).unwrap().distance(&x).unwrap() < TOL);
    assert_eq!(d.outside_ball, 0);
    assert_eq!(d.residual, *d.differences.last().unwrap());
}

#[test]
fn expanding_map_hits_iteration_limit() {
    let p = scalar_problem(0.5, 0.5, 0.0, NonlinSpec::Linear(DMatrix::from_element(1, 1, 6.0)), 1.0);
    let grid = p.grid(64).unwrap();
    assert!(matches!(solve_mild(&p, &grid, TOL, 15), Err(Error::MaxIterExceeded { iterations: 15, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contraction_invariants(
        alpha in 0.3f64..=1.0, beta in 0.0f64..=1.0, a0 in 0.2f64..2.0, kappa in 0.0f64..0.3,
        q in 0.5f64..=1.0, c in 0.0f64..0.3, xi0 in -1.0f64..1.0,
    ) {
        let mut p = scalar_problem(alpha, beta, a0, NonlinSpec::Sine { kappa }, xi0);
        p.delay = DelaySpec::Proportional { q };
        p.nonlocal = NonlocalSpec::single(1.0, c, 1);
        p.ball_radius = 5.0;
        let cert = estimate_constants(&p, &Budget::new(100, 1)).unwrap();
        prop_assume!(cert.pass);
        let grid = p.grid(64).unwrap();
        let (x, d) = solve_mild(&p, &grid, TOL, 200).unwrap();
        // fixed-point residual, ball invariance, observed contraction
        prop_assert!(apply_f(&x, &p, p.numerics.ml_tol).unwrap().distance(&x).unwrap() < TOL);
        prop_assert!(d.iterate_norms.iter().all(|n| *n <= p.ball_radius + TOL));
        prop_assert!(d.ratios.iter().skip(1).all(|r| *r <= cert.q + 0.05), "{:?} vs q = {}", d.ratios, cert.q);
        // a second starting point reaches the same fixed point
        let zero = Trajectory::zeros(grid, 1, p.gamma()).unwrap();
        let (y, _) = solve_mild_from(&p, zero, TOL, 200).unwrap();
        prop_assert!(x.distance(&y).unwrap() < 5.0 * TOL);
    }
}
