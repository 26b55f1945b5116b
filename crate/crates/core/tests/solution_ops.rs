mod common;

use hilfer::fracops::SampledFn;
use hilfer::grid::Grid;
use hilfer::mlf::{ml_eval, MLParams};
use hilfer::solution_ops::{f_operator, k_operator, solve_linear, Generator};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma as sgamma;

const TOL: f64 = 1e-13;

#[test]
fn classical_families_are_exponentials() {
    let g = Generator::scalar(1.7).unwrap();
    assert!((f_operator(&g, 1.0, 1.0, 1.0, TOL).unwrap()[(0, 0)] - (-1.7f64).exp()).abs() < 1e-13);
    assert!((k_operator(&g, 1.0, 0.4, TOL).unwrap()[(0, 0)] - (-0.68f64).exp()).abs() < 1e-13);
}

#[test]
fn zero_generator_gives_power_functions() {
    let g = Generator::new(DMatrix::zeros(2, 2)).unwrap();
    for (alpha, beta, t) in [(0.3, 0.6, 0.7), (0.8, 0.0, 2.0)] {
        let gamma = alpha + beta * (1.0 - alpha);
        let f = f_operator(&g, alpha, beta, t, TOL).unwrap();
        let expect = t.powf(gamma - 1.0) / sgamma(gamma);
        assert!((f - DMatrix::identity(2, 2) * expect).amax() < 1e-13);
        let k = k_operator(&g, alpha, t, TOL).unwrap();
        assert!((k - DMatrix::identity(2, 2) * (t.powf(alpha - 1.0) / sgamma(alpha))).amax() < 1e-13);
    }
}

#[test]
fn riemann_liouville_family_at_one() {
    // E_{1/2,1/2}(-x) = 1/sqrt(pi) - x exp(x^2) erfc(x)
    let exact = 1.0 / std::f64::consts::PI.sqrt() - 1f64.exp() * erfc(1.0);
    let f = f_operator(&Generator::scalar(1.0).unwrap(), 0.5, 0.0, 1.0, TOL).unwrap()[(0, 0)];
    assert!((f - exact).abs() < 1e-10);
    assert!((f - 0.1366060073919493).abs() < 1e-14);
}

#[test]
fn diagonal_kernel_decouples() {
    let g = Generator::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let k = k_operator(&g, 0.5, 0.25, TOL).unwrap();
    let e = |z: f64| ml_eval(&MLParams::new(0.5, 0.5).with_tol(TOL), z).unwrap().value;
    assert!((k[(0, 0)] - 2.0 * e(-0.5)).abs() < 1e-12);
    assert!((k[(1, 1)] - 2.0 * e(-1.0)).abs() < 1e-12);
    assert_eq!(k[(0, 1)], 0.0);
}

#[test]
fn zero_forcing_follows_the_family() {
    let g = Generator::from_rows(&[vec![1.0, 0.5], vec![-0.5, 2.0]]).unwrap();
    let grid = Grid::uniform(0.0, 2.0, 64).unwrap();
    let xi0 = DVector::from_column_slice(&[1.0, -1.0]);
    let forcing = SampledFn::new(grid.clone(), vec![DVector::zeros(2); 65]).unwrap();
    let tr = solve_linear(&g, 0.6, 0.3, &xi0, &forcing, &grid, TOL).unwrap();
    for i in 1..=64 {
        let t = grid.nodes()[i];
        let direct = f_operator(&g, 0.6, 0.3, t, TOL).unwrap() * &xi0;
        assert!((tr.value(i).unwrap() - direct).amax() < 1e-12);
    }
}

#[test]
fn classical_constant_forcing() {
    let (a0, c, xi0) = (1.3, 0.7, 2.0);
    let grid = Grid::uniform(0.0, 3.0, 1024).unwrap();
    let forcing = SampledFn::scalar(grid.clone(), vec![c; 1025]).unwrap();
    let tr = solve_linear(&Generator::scalar(a0).unwrap(), 1.0, 1.0, &DVector::from_element(1, xi0), &forcing, &grid, TOL).unwrap();
    let err = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| (tr.weighted_values[i][0] - (c / a0 + (xi0 - c / a0) * (-a0 * t).exp())).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn caputo_with_zero_generator() {
    let grid = Grid::uniform(0.0, 2.0, 256).unwrap();
    let forcing = SampledFn::scalar(grid.clone(), vec![1.0; 257]).unwrap();
    let tr = solve_linear(&Generator::scalar(0.0).unwrap(), 0.5, 1.0, &DVector::from_element(1, 0.3), &forcing, &grid, TOL).unwrap();
    for (i, &t) in grid.nodes().iter().enumerate() {
        assert!((tr.weighted_values[i][0] - (0.3 + t.sqrt() / sgamma(1.5))).abs() < 1e-12);
    }
}

#[test]
fn caputo_half_order_with_constant_forcing() {
    // xi = c/a0 + (xi0 - c/a0) E_{1/2}(-a0 sqrt t), E_{1/2}(-x) = exp(x^2) erfc(x)
    let (a0, c, xi0) = (0.8, 0.5, 1.5);
    let err = |n: usize| {
        let grid = Grid::uniform(0.0, 2.0, n).unwrap();
        let forcing = SampledFn::scalar(grid.clone(), vec![c; n + 1]).unwrap();
        let tr = solve_linear(&Generator::scalar(a0).unwrap(), 0.5, 1.0, &DVector::from_element(1, xi0), &forcing, &grid, TOL)
            .unwrap();
        grid.nodes()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let x = a0 * t.sqrt();
                let exact = c / a0 + (xi0 - c / a0) * (x * x).exp() * erfc(x);
                (tr.weighted_values[i][0] - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    // the kernel factor E(-a0 s^(1/2)) is interpolated linearly: order 2 alpha = 1
    let (coarse, fine) = (err(256), err(1024));
    assert!(fine < 5e-4, "{fine}");
    assert!(coarse / fine > 3.5, "{coarse} {fine}");
}

#[test]
fn classical_limit_against_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let shift = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let a = &m + DMatrix::identity(2, 2) * (0.2 - shift).max(0.0);
        let grid = Grid::uniform(0.0, 2.0, 1024).unwrap();
        let forcing = SampledFn::from_fn(grid.clone(), |t| DVector::from_column_slice(&[t.sin(), 1.0 - t])).unwrap();
        let xi0 = DVector::from_column_slice(&[0.5, -1.0]);
        let tr = solve_linear(&Generator::new(a.clone()).unwrap(), 1.0, 1.0, &xi0, &forcing, &grid, TOL).unwrap();
        let oracle = common::rk4(|t, x| -&a * x + DVector::from_column_slice(&[t.sin(), 1.0 - t]), xi0, 2.0, 1024, 4);
        let err = tr.weighted_values.iter().zip(&oracle).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }
}

proptest! {
    #[test]
    fn kernel_scaling_covariance(alpha in 0.2f64..1.0, a0 in 0.1f64..2.0, c in 0.3f64..3.0, t in 0.05f64..1.5) {
        // K(t / c^(1/alpha); c a0) = c^((1-alpha)/alpha) K(t; a0)
        let tc = t / c.powf(1.0 / alpha);
        let lhs = k_operator(&Generator::scalar(c * a0).unwrap(), alpha, tc, TOL);
        let rhs = k_operator(&Generator::scalar(a0).unwrap(), alpha, t, TOL);
        let rounding = ml_eval(&MLParams::new(alpha, alpha).with_tol(TOL), -a0 * t.powf(alpha)).map(|r| r.rounding);
        if let (Ok(l), Ok(r), Ok(rounding)) = (lhs, rhs, rounding) {
            let scale = c.powf((1.0 - alpha) / alpha) * t.powf(alpha - 1.0);
            let scaled = c.powf((1.0 - alpha) / alpha) * r[(0, 0)];
            let allowed = scale * (10.0 * TOL + 4.0 * rounding) + 1e-13 * scaled.abs();
            prop_assert!((l[(0, 0)] - scaled).abs() <= allowed);
        }
    }

    #[test]
    fn solution_is_linear_in_data(
        p in -2.0f64..2.0, q in -2.0f64..2.0, alpha in 0.2f64..=1.0, beta in 0.0f64..=1.0,
        x1 in proptest::collection::vec(-1.0f64..1.0, 2), x2 in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let g = Generator::from_rows(&[vec![0.5, 0.2], vec![0.0, 1.0]]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 32).unwrap();
        let f1 = SampledFn::from_fn(grid.clone(), |t| DVector::from_column_slice(&[t.cos(), t])).unwrap();
        let f2 = SampledFn::from_fn(grid.clone(), |t| DVector::from_column_slice(&[1.0, -t * t])).unwrap();
        let fc = SampledFn::new(grid.clone(), f1.values.iter().zip(&f2.values).map(|(a, b)| a * p + b * q).collect()).unwrap();
        let (x1, x2) = (DVector::from_vec(x1), DVector::from_vec(x2));
        let s = |x: &DVector<f64>, f: &SampledFn| solve_linear(&g, alpha, beta, x, f, &grid, TOL).unwrap();
        let lhs = s(&(&x1 * p + &x2 * q), &fc);
        let (a, b) = (s(&x1, &f1), s(&x2, &f2));
        for i in 0..33 {
            let rhs = &a.weighted_values[i] * p + &b.weighted_values[i] * q;
            prop_assert!((&lhs.weighted_values[i] - &rhs).amax() <= 1e-12 * (1.0 + rhs.amax()));
        }
    }
}
