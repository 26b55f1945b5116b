#![allow(dead_code)]

use hilfer::problem::{DelaySpec, NonlinSpec, NonlocalSpec, Numerics, Problem};
use hilfer::solution_ops::Generator;
use nalgebra::{DMatrix, DVector};

/// alpha = beta = 1/2, A = diag(1, 2), sine(0.1) nonlinearity, sigma(t) = t/2,
/// nonlocal term 0.05 xi(a), a = 3.5.
pub fn demo() -> Problem {
    let a = 3.5;
    Problem {
        gen: Generator::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap(),
        alpha: 0.5,
        beta: 0.5,
        t0: 0.0,
        a,
        xi0: DVector::from_column_slice(&[1.0, -0.5]),
        nonlin: NonlinSpec::Sine { kappa: 0.1 },
        delay: DelaySpec::Proportional { q: 0.5 },
        nonlocal: NonlocalSpec::single(a, 0.05, 2),
        ball_radius: 4.0,
        numerics: Numerics::default(),
    }
}

/// Classical (alpha = beta = 1) problem on [0, a].
pub fn classical(a_mat: DMatrix<f64>, nonlin: NonlinSpec, xi0: &[f64], a: f64) -> Problem {
    Problem {
        gen: Generator::new(a_mat).unwrap(),
        alpha: 1.0,
        beta: 1.0,
        t0: 0.0,
        a,
        xi0: DVector::from_column_slice(xi0),
        nonlin,
        delay: DelaySpec::Identity,
        nonlocal: NonlocalSpec::none(),
        ball_radius: 10.0,
        numerics: Numerics::default(),
    }
}

/// Classical fourth-order Runge-Kutta for `x' = f(t, x)`, sampled at `n + 1`
/// equispaced points with `sub` internal steps per output interval.
pub fn rk4(f: impl Fn(f64, &DVector<f64>) -> DVector<f64>, x0: DVector<f64>, a: f64, n: usize, sub: usize) -> Vec<DVector<f64>> {
    let h = a / (n * sub) as f64;
    let mut x = x0;
    let mut out = vec![x.clone()];
    for i in 0..n {
        for j in 0..sub {
            let t = (i * sub + j) as f64 * h;
            let k1 = f(t, &x);
            let k2 = f(t + 0.5 * h, &(&x + &k1 * (0.5 * h)));
            let k3 = f(t + 0.5 * h, &(&x + &k2 * (0.5 * h)));
            let k4 = f(t + h, &(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(x.clone());
    }
    out
}
