//! Checks on a computed mild solution: increments against the Gronwall-type
//! bound `theta(h) E_alpha(zeta1 delta R~ C~ a^alpha Gamma(alpha))`, the delay
//! compatibility constant `R~`, and the defects of the differential equation
//! and of the nonlocal initial condition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certifier::Certificate;
use crate::error::{Error, Result};
use crate::fracops::{hilfer_derivative, PsiMap};
use crate::mlf::{ml_eval, MLParams};
use crate::picard::{eval_delay, DelayValue};
use crate::problem::{DelaySpec, Problem};
use crate::special::gamma;
use crate::trajectory::Trajectory;

/// Maximum weighted increment `max_t |x_w(t + h) - x_w(t)|` for one `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Increment {
    pub h: f64,
    pub increment: f64,
}

/// Weighted increments for grid-aligned shifts `h`.
pub fn lipschitz_modulus(traj: &Trajectory, h_values: &[f64]) -> Result<Vec<Increment>> {
    let step = traj
        .grid
        .step()
        .ok_or_else(|| Error::InvalidGrid("increments need a uniform grid".into()))?;
    h_values
        .iter()
        .map(|&h| {
            let k = (h / step).round();
            if !(h > 0.0) || k < 1.0 || (k * step - h).abs() > 1e-9 * h.max(step) {
                return Err(Error::HNotAligned { h, step });
            }
            let k = k as usize;
            let v = &traj.weighted_values;
            let increment = (0..v.len().saturating_sub(k))
                .map(|i| (&v[i + k] - &v[i]).norm())
                .fold(0.0, f64::max);
            Ok(Increment { h, increment })
        })
        .collect()
}

/// Largest ratio `|x_w(sigma(s)) - x_w(sigma(t))| / |x_w(s) - x_w(t)|` over
/// `samples` random pairs of distinct nodes.
pub fn r_tilde(traj: &Trajectory, delay: &DelaySpec, samples: usize, seed: u64) -> Result<f64> {
    let n = traj.len();
    let t0 = traj.grid.t0();
    let nodes = traj.grid.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let den = (&traj.weighted_values[i] - &traj.weighted_values[j]).norm();
        if den == 0.0 {
            continue;
        }
        let at = |k: usize| {
            let s = delay.eval(t0, nodes[k]);
            traj.weighted_at(s).ok_or(Error::DelayOutOfRange { s: nodes[k], sigma: s })
        };
        let num = (at(i)? - at(j)?).norm();
        best = best.max(num / den);
    }
    Ok(best)
}

/// `theta(h) = 2 z1 h |xi0| + 2 z1 z3 h + z1 delta h r / b + z1 z2 h + z1 delta h a`.
pub fn theta(cert: &Certificate, h: f64) -> f64 {
    let z1 = cert.zeta1;
    2.0 * z1 * h * cert.xi0_norm
        + 2.0 * z1 * cert.zeta3 * h
        + z1 * cert.delta * h * cert.r / cert.b
        + z1 * cert.zeta2 * h
        + z1 * cert.delta * h * cert.a
}

/// `theta(h)` with the term `z1 z2 b` in place of `z1 z2 h`.
pub fn theta_verbatim(cert: &Certificate, h: f64) -> f64 {
    theta(cert, h) - cert.zeta1 * cert.zeta2 * h + cert.zeta1 * cert.zeta2 * cert.b
}

/// Argument `z1 delta R~ C~ a^alpha Gamma(alpha)` of the Mittag-Leffler factor.
pub fn ml_argument(cert: &Certificate, r_tilde: f64, c_tilde: f64, alpha: f64) -> f64 {
    cert.zeta1 * cert.delta * r_tilde * c_tilde * cert.a.powf(alpha) * gamma(alpha)
}

/// `theta(h) E_alpha(z1 delta R~ C~ a^alpha Gamma(alpha))`.
pub fn gronwall_bound(cert: &Certificate, r_tilde: f64, c_tilde: f64, h: f64, alpha: f64) -> Result<f64> {
    let z = ml_argument(cert, r_tilde, c_tilde, alpha);
    let e = ml_eval(&MLParams::new(alpha, 1.0), z)?;
    Ok(theta(cert, h) * e.value)
}

/// `max |D^{alpha,beta} xi + A xi - phi(t, xi(sigma(t)))|` over nodes `2..=N-1`.
pub fn strong_residual(traj: &Trajectory, prob: &Problem) -> Result<f64> {
    let profile = residual_profile(traj, prob)?;
    Ok(profile.iter().skip(2).take(traj.len().saturating_sub(3)).fold(0.0, |m, r| m.max(*r)))
}

/// Maximum defect over nodes `t >= t_min` (excluding the last node).
pub fn strong_residual_after(traj: &Trajectory, prob: &Problem, t_min: f64) -> Result<f64> {
    let profile = residual_profile(traj, prob)?;
    let nodes = traj.grid.nodes();
    Ok((1..traj.len().saturating_sub(1))
        .filter(|&i| nodes[i] >= t_min)
        .fold(0.0, |m, i| m.max(profile[i])))
}

/// Pointwise defect at every node (the first value uses a one-sided stencil).
pub fn residual_profile(traj: &Trajectory, prob: &Problem) -> Result<Vec<f64>> {
    if (traj.gamma - prob.gamma()).abs() > 1e-14 {
        return Err(Error::InvalidParams("trajectory and problem have different gamma".into()));
    }
    let d = hilfer_derivative(&traj.to_sampled()?, prob.alpha, prob.beta, &PsiMap::Identity)?;
    let a = prob.gen.matrix();
    let nodes = traj.grid.nodes();
    (0..traj.len())
        .map(|i| {
            if i == 0 && traj.gamma < 1.0 {
                return Ok(f64::NAN);
            }
            let x = traj.value(i)?;
            let u = match eval_delay(traj, &prob.delay, nodes[i])? {
                DelayValue::Value(u) => u,
                DelayValue::Singular { .. } => return Err(Error::SingularEndpoint { gamma: traj.gamma }),
            };
            Ok((&d.values[i] + a * &x - prob.phi(nodes[i], &u)).norm())
        })
        .collect()
}

/// `|Gamma(gamma) x_w(t0) + phi_nl(xi) - xi0|`.
pub fn initial_condition_residual(traj: &Trajectory, prob: &Problem) -> Result<f64> {
    let lim = &traj.weighted_values[0] * gamma(traj.gamma);
    Ok((lim + prob.nonlocal.eval(traj)? - &prob.xi0).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub h: f64,
    pub increment: f64,
    pub theta: f64,
    pub theta_verbatim: f64,
    pub bound: f64,
    pub bound_verbatim: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongReport {
    /// `max_h increment(h) / h`
    pub lipschitz_modulus: f64,
    pub r_tilde: f64,
    /// Ball radius, reported next to `R~` for comparison.
    pub ball_radius: f64,
    pub c_tilde: f64,
    pub ml_argument: f64,
    pub ml_factor: f64,
    /// Same factor with the ball radius in place of `R~`.
    pub ml_factor_ball: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub residual_eq: f64,
    /// Defect over `t >= t0 + a/8`, away from the singular end point.
    pub residual_eq_tail: f64,
    pub residual_ic: f64,
}

/// Assembles the full report for a solved problem.
pub fn verify(
    traj: &Trajectory,
    prob: &Problem,
    cert: &Certificate,
    h_values: &[f64],
    c_tilde: f64,
    samples: usize,
    seed: u64,
) -> Result<StrongReport> {
    let incs = lipschitz_modulus(traj, h_values)?;
    let rt = r_tilde(traj, &prob.delay, samples, seed)?;
    let z = ml_argument(cert, rt, c_tilde, prob.alpha);
    let ml_factor = ml_eval(&MLParams::new(prob.alpha, 1.0), z)?.value;
    let ml_factor_ball = ml_eval(
        &MLParams::new(prob.alpha, 1.0),
        ml_argument(cert, prob.ball_radius, c_tilde, prob.alpha),
    )
    .ok()
    .map(|r| r.value);
    let checks = incs
        .iter()
        .map(|inc| {
            let th = theta(cert, inc.h);
            let tv = theta_verbatim(cert, inc.h);
            BoundCheck {
                h: inc.h,
                increment: inc.increment,
                theta: th,
                theta_verbatim: tv,
                bound: th * ml_factor,
                bound_verbatim: tv * ml_factor,
                dominated: inc.increment <= th * ml_factor,
            }
        })
        .collect();
    Ok(StrongReport {
        lipschitz_modulus: incs.iter().map(|i| i.increment / i.h).fold(0.0, f64::max),
        r_tilde: rt,
        ball_radius: prob.ball_radius,
        c_tilde,
        ml_argument: z,
        ml_factor,
        ml_factor_ball,
        checks,
        residual_eq: strong_residual(traj, prob)?,
        residual_eq_tail: strong_residual_after(traj, prob, prob.t0 + prob.a / 8.0)?,
        residual_ic: initial_condition_residual(traj, prob)?,
    })
}
