//! Numerical estimates of the constants behind the existence and uniqueness
//! conditions, and the pass/fail report.
//!
//! | constant | meaning |
//! |---|---|
//! | `zeta1` | `max_t |t^(1-gamma) F(t)|_2 = max_t |E_{alpha,gamma}(-A t^alpha)|_2` |
//! | `zeta2` | `max_s |phi(s, 0)|` |
//! | `zeta3` | `max |phi_nl(xi)|` over the ball of radius `r` |
//! | `delta` | Lipschitz constant of `phi` in `u` on the ball |
//! | `lambda` | Lipschitz constant of the nonlocal map in the weighted norm |
//! | `b` | `inf sigma'` |
//!
//! and `q = zeta1 lambda + zeta1 delta a / b`,
//! `cond6 = zeta1 (|xi0| + zeta3 + a r delta / b + a zeta2)`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{spectral_norm, NonlinSpec, Problem};
use crate::solution_ops::f_operator_weighted;

/// Minimum number of samples per sampled constant.
pub const MIN_BUDGET: usize = 100;

/// How a constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Exact formula for the problem's kind.
    ClosedForm,
    /// Maximum over random samples: a lower bound, so a PASS is advisory.
    Sampled,
    /// Maximum over a refined time grid.
    GridMax,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub zeta1: Source,
    pub zeta2: Source,
    pub zeta3: Source,
    pub delta: Source,
    pub lambda: Source,
    pub b: Source,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Random pairs per sampled Lipschitz constant.
    pub samples: usize,
    pub seed: u64,
    /// Time samples for `zeta1`.
    pub time_samples: usize,
}

impl Budget {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            time_samples: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub xi0_norm: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub delta: f64,
    pub lambda: f64,
    pub b: f64,
    /// Radius the conditions are tested at.
    pub r: f64,
    /// `zeta1 lambda + zeta1 delta a / b`
    pub q: f64,
    /// `zeta1 zeta3 + zeta1 delta a / b`, the variant with `zeta3` in place of `lambda`.
    pub q_zeta3: f64,
    pub cond6_lhs: f64,
    /// Smallest radius with `cond6_lhs(r) <= r` (when `q < 1`).
    pub r_min: Option<f64>,
    /// Conditions (1) to (6).
    pub passes: [bool; 6],
    pub pass: bool,
    pub provenance: Provenance,
    pub sampling_budget: usize,
    pub seed: u64,
}

impl Certificate {
    /// `q` recomputed from the reported fields.
    pub fn contraction(&self) -> f64 {
        self.zeta1 * self.lambda + self.zeta1 * self.delta * self.a / self.b
    }

    /// `zeta3` at radius `r` (the nonlocal map is linear).
    pub fn zeta3_at(&self, r: f64) -> f64 {
        self.lambda * r
    }

    pub fn cond6_lhs_at(&self, r: f64) -> f64 {
        self.zeta1 * (self.xi0_norm + self.zeta3_at(r) + self.a * r * self.delta / self.b + self.a * self.zeta2)
    }

    /// True when every constant has a closed form or grid maximum (nothing sampled).
    pub fn is_proved(&self) -> bool {
        let p = &self.provenance;
        [p.zeta1, p.zeta2, p.zeta3, p.delta, p.lambda, p.b]
            .iter()
            .all(|s| *s != Source::Sampled)
    }
}

/// Uniform sample of the closed ball of radius `r` in `R^d`.
fn ball_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> DVector<f64> {
    let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    let radius = r * rng.random::<f64>().powf(1.0 / d as f64);
    v * radius
}

fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        let mut e = DVector::zeros(d);
        e[0] = 1.0;
        e
    }
}

/// Maximum difference quotient `|f(u) - f(v)| / |u - v|` over `samples`
/// random pairs in the ball of radius `r`.
///
/// Even-numbered samples are independent uniform pairs; odd ones perturb a
/// uniform point by a small random step, which resolves local slopes. Each
/// sample consumes the same amount of randomness, so a larger budget
/// evaluates a superset of the pairs of a smaller one.
pub fn sampled_lipschitz(f: impl Fn(&DVector<f64>) -> DVector<f64>, d: usize, r: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for k in 0..samples {
        let u = ball_point(&mut rng, d, r);
        let v_far = ball_point(&mut rng, d, r);
        let dir = unit_direction(&mut rng, d);
        let step = 1e-6 * r.max(1e-300);
        let v = if k % 2 == 0 { v_far } else { &u + dir * step };
        let du = (&u - &v).norm();
        if du > 0.0 {
            let q = (f(&u) - f(&v)).norm() / du;
            if q.is_finite() {
                best = best.max(q);
            }
        }
    }
    best
}

/// Sampled Lipschitz constant of the problem's nonlinearity on its ball.
pub fn sampled_delta(prob: &Problem, budget: &Budget) -> Result<f64> {
    if budget.samples < MIN_BUDGET {
        return Err(Error::BudgetTooSmall {
            requested: budget.samples,
            minimum: MIN_BUDGET,
        });
    }
    let t = prob.t0;
    Ok(sampled_lipschitz(
        |u| prob.phi(t, u),
        prob.dim(),
        prob.ball_radius,
        budget.samples,
        budget.seed,
    ))
}

fn delta_of(prob: &Problem, budget: &Budget) -> Result<(f64, Source)> {
    Ok(match &prob.nonlin {
        NonlinSpec::Zero => (0.0, Source::ClosedForm),
        NonlinSpec::Linear(l) => (spectral_norm(l), Source::ClosedForm),
        NonlinSpec::Sine { kappa } => (kappa.abs(), Source::ClosedForm),
        NonlinSpec::Tabulated { .. } => (prob.nonlin.table_max_slope().unwrap_or(0.0), Source::ClosedForm),
        NonlinSpec::Polynomial { .. } => (sampled_delta(prob, budget)?, Source::Sampled),
    })
}

/// `max |E_{alpha,gamma}(-A t^alpha)|_2` over `t in [0, a]`, sampled uniformly
/// in `t` and in `t^alpha` (where the family varies fastest).
pub fn zeta1(prob: &Problem, samples: usize) -> Result<f64> {
    let m = samples.max(2);
    let mut best = 0.0f64;
    for k in 0..=m {
        let x = k as f64 / m as f64;
        for t in [prob.a * x, prob.a * x.powf(1.0 / prob.alpha)] {
            let f = f_operator_weighted(&prob.gen, prob.alpha, prob.beta, t, prob.numerics.ml_tol)?;
            best = best.max(spectral_norm(&f));
        }
    }
    Ok(best)
}

fn zeta2_of(prob: &Problem) -> f64 {
    prob.phi(prob.t0, &DVector::zeros(prob.dim())).norm()
}

/// Estimates every constant for `prob`, testing the conditions at the ball radius.
pub fn estimate_constants(prob: &Problem, budget: &Budget) -> Result<Certificate> {
    if budget.samples < MIN_BUDGET {
        return Err(Error::BudgetTooSmall {
            requested: budget.samples,
            minimum: MIN_BUDGET,
        });
    }
    prob.validate()?;
    let gamma = prob.gamma();
    let zeta1 = zeta1(prob, budget.time_samples)?;
    let zeta2 = zeta2_of(prob);
    let (delta, delta_src) = delta_of(prob, budget)?;
    let lambda = prob.nonlocal.weighted_lipschitz(prob.t0, gamma);
    let b = prob.delay.derivative_lower_bound();
    let r = prob.ball_radius;
    let mut cert = Certificate {
        alpha: prob.alpha,
        beta: prob.beta,
        gamma,
        a: prob.a,
        xi0_norm: prob.xi0.norm(),
        zeta1,
        zeta2,
        zeta3: 0.0,
        delta,
        lambda,
        b,
        r,
        q: 0.0,
        q_zeta3: 0.0,
        cond6_lhs: 0.0,
        r_min: None,
        passes: [false; 6],
        pass: false,
        provenance: Provenance {
            zeta1: Source::GridMax,
            zeta2: Source::ClosedForm,
            zeta3: Source::ClosedForm,
            delta: delta_src,
            lambda: Source::ClosedForm,
            b: Source::ClosedForm,
        },
        sampling_budget: budget.samples,
        seed: budget.seed,
    };
    let report = check_conditions(&cert, r);
    cert.zeta3 = report.zeta3;
    cert.q = report.q;
    cert.q_zeta3 = report.q_zeta3;
    cert.cond6_lhs = report.cond6_lhs;
    cert.r_min = report.r_min;
    cert.passes = report.passes();
    cert.pass = report.pass;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub r: f64,
    pub zeta3: f64,
    pub q: f64,
    pub q_zeta3: f64,
    pub cond6_lhs: f64,
    /// `r - cond6_lhs`
    pub margin: f64,
    pub r_min: Option<f64>,
    pub conditions: Vec<ConditionCheck>,
    pub pass: bool,
    /// Some constant was sampled, so a PASS is not a proof.
    pub advisory: bool,
}

impl Report {
    pub fn passes(&self) -> [bool; 6] {
        let mut p = [false; 6];
        for c in &self.conditions {
            p[(c.id - 1) as usize] = c.passed;
        }
        p
    }
}

/// Evaluates conditions (1) to (6) of a certificate at radius `r`.
pub fn check_conditions(cert: &Certificate, r: f64) -> Report {
    let finite = |x: f64| x.is_finite() && x >= 0.0;
    let q = cert.contraction();
    let zeta3 = cert.zeta3_at(r);
    let q_zeta3 = cert.zeta1 * zeta3 + cert.zeta1 * cert.delta * cert.a / cert.b;
    let cond6_lhs = cert.cond6_lhs_at(r);
    let r_min = (q < 1.0).then(|| cert.zeta1 * (cert.xi0_norm + cert.a * cert.zeta2) / (1.0 - q));

    let c1 = r > 0.0 && r.is_finite();
    let c2 = cert.b > 0.0 && cert.b.is_finite();
    let c3 = finite(cert.lambda) && finite(zeta3);
    let c5 = finite(cert.zeta1) && finite(cert.zeta2) && finite(cert.delta);
    let c6 = q < 1.0 && cond6_lhs <= r;
    let mut c6_detail = format!("q = {q:.6} ({}), cond6_lhs = {cond6_lhs:.6} ", if q < 1.0 { "< 1" } else { "not < 1" });
    c6_detail.push_str(if cond6_lhs <= r { "<= r" } else { "> r" });
    let conditions = vec![
        ConditionCheck {
            id: 1,
            name: "ball",
            passed: c1,
            detail: format!("r = {r}"),
        },
        ConditionCheck {
            id: 2,
            name: "delay",
            passed: c2,
            detail: format!("b = {}", cert.b),
        },
        ConditionCheck {
            id: 3,
            name: "nonlocal",
            passed: c3,
            detail: format!("lambda = {}, zeta3 = {zeta3}", cert.lambda),
        },
        ConditionCheck {
            id: 4,
            name: "generator",
            passed: true,
            detail: "bounded matrix generator".into(),
        },
        ConditionCheck {
            id: 5,
            name: "bounds",
            passed: c5,
            detail: format!("zeta1 = {}, zeta2 = {}, delta = {}", cert.zeta1, cert.zeta2, cert.delta),
        },
        ConditionCheck {
            id: 6,
            name: "contraction",
            passed: c6,
            detail: c6_detail,
        },
    ];
    let pass = conditions.iter().all(|c| c.passed);
    Report {
        r,
        zeta3,
        q,
        q_zeta3,
        cond6_lhs,
        margin: r - cond6_lhs,
        r_min,
        conditions,
        pass,
        advisory: !cert.is_proved(),
    }
}
