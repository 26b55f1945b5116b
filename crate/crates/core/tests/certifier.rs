mod common;

use hilfer::certifier::{check_conditions, estimate_constants, sampled_delta, sampled_lipschitz, zeta1, Budget, Source};
use hilfer::error::Error;
use hilfer::problem::{spectral_norm, DelaySpec, NonlinSpec, NonlocalSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rotation(scale: f64, angle: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[scale * angle.cos(), -scale * angle.sin(), scale * angle.sin(), scale * angle.cos()])
}

#[test]
fn closed_forms() {
    let mut p = common::classical(DMatrix::identity(2, 2), NonlinSpec::Linear(rotation(0.3, 1.1)), &[1.0, 0.0], 1.0);
    p.alpha = 0.7;
    p.beta = 0.2;
    let c = estimate_constants(&p, &Budget::new(100, 3)).unwrap();
    assert!((c.delta - 0.3).abs() < 1e-15);
    assert_eq!(c.b, 1.0);
    assert_eq!((c.lambda, c.zeta3), (0.0, 0.0));
    assert_eq!(c.provenance.delta, Source::ClosedForm);
    assert!(c.is_proved());
    assert_eq!(c.q, c.zeta1 * c.lambda + c.zeta1 * c.delta * c.a / c.b);
}

#[test]
fn classical_zeta1_is_one() {
    // max over [0, 1] of exp(-t)
    let p = common::classical(DMatrix::identity(1, 1), NonlinSpec::Zero, &[1.0], 1.0);
    assert!((zeta1(&p, 4096).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn demo_certificate() {
    let p = common::demo();
    let c = estimate_constants(&p, &Budget::new(10_000, 42)).unwrap();
    assert_eq!((c.delta, c.b), (0.1, 0.5));
    // nonlocal Lipschitz constant in the weighted norm: 0.05 a^(gamma - 1)
    assert!((c.lambda - 0.05 * 3.5f64.powf(-0.25)).abs() < 1e-15);
    assert!(c.q < 1.0 && c.pass);
    assert!(c.cond6_lhs <= c.r);
    let r_min = c.r_min.unwrap();
    assert!((c.cond6_lhs_at(r_min) - r_min).abs() < 1e-12);
}

#[test]
fn condition_report_arithmetic() {
    let p = common::classical(DMatrix::identity(1, 1), NonlinSpec::Zero, &[0.2], 1.0);
    let mut c = estimate_constants(&p, &Budget::new(100, 1)).unwrap();
    c.zeta1 = 1.0;
    c.zeta2 = 0.0;
    c.lambda = 0.1;
    c.delta = 0.5;
    let rep = check_conditions(&c, 1.0);
    assert!((rep.q - 0.6).abs() < 1e-15);
    assert!((rep.cond6_lhs - 0.8).abs() < 1e-15);
    assert!((rep.margin - 0.2).abs() < 1e-15);
    assert!(rep.pass);

    c.lambda = 0.7;
    let rep = check_conditions(&c, 1.0);
    assert!((rep.q - 1.2).abs() < 1e-15);
    assert!(!rep.pass && !rep.passes()[5]);
    assert!(rep.conditions[5].detail.contains("q = 1.2"));

    c.lambda = 0.1;
    c.b = 0.0;
    let rep = check_conditions(&c, 1.0);
    assert!(!rep.passes()[1] && !rep.pass);
}

#[test]
fn lag_delay_fails_condition_two() {
    let mut p = common::demo();
    p.delay = DelaySpec::Lag { tau: 0.5 };
    let c = estimate_constants(&p, &Budget::new(100, 1)).unwrap();
    assert_eq!(c.b, 0.0);
    assert!(!c.passes[1] && !c.pass);
}

#[test]
fn budget_minimum() {
    assert!(matches!(
        estimate_constants(&common::demo(), &Budget::new(99, 1)),
        Err(Error::BudgetTooSmall { requested: 99, minimum: 100 })
    ));
}

#[test]
fn sampled_agrees_with_closed_forms() {
    let l = rotation(0.3, 0.4) * DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 0.5]));
    let exact = spectral_norm(&l);
    let lin = sampled_lipschitz(|u| &l * u, 2, 4.0, 10_000, 42);
    assert!(lin <= exact * (1.0 + 1e-12) && lin >= 0.98 * exact, "{lin} vs {exact}");
    let sine = sampled_lipschitz(|u| u.map(|x| 0.1 * x.sin()), 2, 4.0, 10_000, 42);
    assert!((0.098..=0.1 * (1.0 + 1e-12)).contains(&sine), "{sine}");
}

#[test]
fn polynomial_delta_is_sampled() {
    let mut p = common::demo();
    p.nonlin = NonlinSpec::Polynomial { coeffs: vec![0.0, 0.05, 0.0, -0.01] };
    let c = estimate_constants(&p, &Budget::new(10_000, 42)).unwrap();
    assert_eq!(c.provenance.delta, Source::Sampled);
    assert!(!c.is_proved() && check_conditions(&c, c.r).advisory);
    // sup of |0.05 - 0.03 x^2| over |x| <= 4 is 0.43
    assert!(c.delta <= 0.43 + 1e-9 && c.delta > 0.4, "{}", c.delta);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn larger_budget_never_lowers_the_estimate(n in 100usize..2000, extra in 1usize..2000, seed in 0u64..1000) {
        let mut p = common::demo();
        p.nonlin = NonlinSpec::Polynomial { coeffs: vec![0.1, -0.2, 0.05, 0.01] };
        let small = sampled_delta(&p, &Budget::new(n, seed)).unwrap();
        let large = sampled_delta(&p, &Budget::new(n + extra, seed)).unwrap();
        prop_assert!(large >= small);
    }

    #[test]
    fn q_matches_reported_fields(
        alpha in 0.3f64..=1.0, beta in 0.0f64..=1.0, kappa in 0.0f64..1.0, q in 0.1f64..=1.0,
        c in 0.0f64..0.5, radius in 0.5f64..10.0,
    ) {
        let mut p = common::demo();
        p.alpha = alpha;
        p.beta = beta;
        p.nonlin = NonlinSpec::Sine { kappa };
        p.delay = DelaySpec::Proportional { q };
        p.nonlocal = NonlocalSpec::single(p.a, c, 2);
        p.ball_radius = radius;
        let cert = match estimate_constants(&p, &Budget::new(100, 0)) {
            Ok(c) => c,
            Err(e) if e.is_numerical() => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let recomputed = cert.zeta1 * cert.lambda + cert.zeta1 * cert.delta * cert.a / cert.b;
        prop_assert_eq!(cert.q, recomputed);
        prop_assert!([cert.zeta1, cert.zeta2, cert.zeta3, cert.delta, cert.lambda, cert.b].iter().all(|x| *x >= 0.0));
        prop_assert_eq!(cert.passes[5], cert.cond6_lhs <= cert.r && cert.q < 1.0);
    }
}
