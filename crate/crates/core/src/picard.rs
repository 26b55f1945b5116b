//! Mild solutions by fixed-point iteration of
//!
//! ```text
//! (F mu)(t) = F(t - t0) (xi0 - phi_nl(mu)) + int_{t0}^{t} K(t - s) phi(s, mu(sigma(s))) ds
//! ```
//!
//! in the weighted space `C_{1-gamma}`. Each sweep covers the whole horizon
//! and reads only the previous iterate, so delays with `sigma(t) > t` are fine.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::problem::{DelaySpec, Problem};
use crate::solution_ops::Evolution;
use crate::trajectory::Trajectory;

pub use crate::trajectory::weighted_norm;

/// `xi(sigma(s))` read from a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayValue {
    Value(DVector<f64>),
    /// `sigma(s) = t0` with `gamma < 1`: only the weighted limit exists.
    Singular { weighted: DVector<f64> },
}

impl DelayValue {
    pub fn value(&self) -> Option<&DVector<f64>> {
        match self {
            DelayValue::Value(v) => Some(v),
            DelayValue::Singular { .. } => None,
        }
    }
}

/// Interpolates the weighted values at `sigma(s)` and removes the weight.
pub fn eval_delay(traj: &Trajectory, delay: &DelaySpec, s: f64) -> Result<DelayValue> {
    let t0 = traj.grid.t0();
    let sigma = delay.eval(t0, s);
    let weighted = traj
        .weighted_at(sigma)
        .ok_or(Error::DelayOutOfRange { s, sigma })?;
    if traj.gamma == 1.0 {
        return Ok(DelayValue::Value(weighted));
    }
    let w = traj.weight(sigma);
    if w <= 0.0 || traj.grid.locate(sigma) == Some((0, 0.0)) {
        Ok(DelayValue::Singular { weighted })
    } else {
        Ok(DelayValue::Value(weighted / w))
    }
}

/// The fixed-point map with its operator samples precomputed for one grid.
pub struct MildOperator<'a> {
    prob: &'a Problem,
    evo: Evolution,
}

impl<'a> MildOperator<'a> {
    /// `ml_tol` is the accuracy of every operator sample.
    pub fn new(prob: &'a Problem, grid: &Grid, ml_tol: f64) -> Result<Self> {
        prob.validate()?;
        if (grid.t0() - prob.t0).abs() > 1e-12 * prob.a.max(1.0) || (grid.a() - prob.a).abs() > 1e-12 * prob.a.max(1.0) {
            return Err(Error::InvalidGrid("grid does not span the problem horizon".into()));
        }
        Ok(Self {
            prob,
            evo: Evolution::new(&prob.gen, prob.alpha, prob.beta, grid, ml_tol)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.evo.grid
    }

    /// Homogeneous solution `F(t - t0) xi0` (nonlinearity and nonlocal term dropped).
    pub fn homogeneous(&self) -> Result<Trajectory> {
        let values = self.evo.f_weighted.iter().map(|f| f * &self.prob.xi0).collect();
        Trajectory::new(self.evo.grid.clone(), values, self.evo.gamma)
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<Trajectory> {
        if traj.grid != self.evo.grid || traj.dim() != self.prob.dim() {
            return Err(Error::DimensionMismatch("trajectory does not live on the operator's grid".into()));
        }
        let p = self.prob;
        let v = &p.xi0 - p.nonlocal.eval(traj)?;
        let g = if matches!(p.nonlin, crate::problem::NonlinSpec::Zero) {
            vec![Some(DVector::zeros(p.dim())); traj.len()]
        } else {
            traj.grid
                .nodes()
                .iter()
                .map(|&s| {
                    Ok(match eval_delay(traj, &p.delay, s)? {
                        DelayValue::Value(u) => Some(p.phi(s, &u)),
                        DelayValue::Singular { .. } => None,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        };
        Trajectory::new(self.evo.grid.clone(), self.evo.assemble(&v, &g)?, self.evo.gamma)
    }
}

/// One application of the fixed-point map.
pub fn apply_f(traj: &Trajectory, prob: &Problem, tol: f64) -> Result<Trajectory> {
    MildOperator::new(prob, &traj.grid, tol)?.apply(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    /// Number of map applications.
    pub iterations: usize,
    /// `d_n = |x_{n+1} - x_n|` in the weighted norm.
    pub differences: Vec<f64>,
    /// `d_{n+1} / d_n`.
    pub ratios: Vec<f64>,
    /// Weighted norm of every iterate, starting with the initial one.
    pub iterate_norms: Vec<f64>,
    /// Iterates whose weighted norm exceeded the ball radius.
    pub outside_ball: usize,
    /// `|F(x) - x|` of the returned trajectory.
    pub residual: f64,
}

/// Iterates from the homogeneous solution until consecutive iterates differ
/// by less than `tol`; the returned iterate `x` then satisfies `|F(x) - x| < tol`.
pub fn solve_mild(prob: &Problem, grid: &Grid, tol: f64, max_iter: usize) -> Result<(Trajectory, IterationDiagnostics)> {
    let op = MildOperator::new(prob, grid, prob.numerics.ml_tol)?;
    let start = op.homogeneous()?;
    iterate(&op, start, tol, max_iter)
}

/// As [`solve_mild`] from a caller-supplied first iterate.
pub fn solve_mild_from(
    prob: &Problem,
    initial: Trajectory,
    tol: f64,
    max_iter: usize,
) -> Result<(Trajectory, IterationDiagnostics)> {
    let op = MildOperator::new(prob, &initial.grid, prob.numerics.ml_tol)?;
    iterate(&op, initial, tol, max_iter)
}

/// Runs the iteration with a prepared operator.
pub fn iterate(op: &MildOperator, start: Trajectory, tol: f64, max_iter: usize) -> Result<(Trajectory, IterationDiagnostics)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {tol}")));
    }
    let radius = op.prob.ball_radius;
    let mut diag = IterationDiagnostics {
        iterations: 0,
        differences: Vec::new(),
        ratios: Vec::new(),
        iterate_norms: vec![start.weighted_norm()],
        outside_ball: 0,
        residual: f64::NAN,
    };
    if diag.iterate_norms[0] > radius {
        diag.outside_ball += 1;
    }
    let mut cur = start;
    for n in 1..=max_iter {
        let next = op.apply(&cur)?;
        let d = next.distance(&cur)?;
        diag.iterations = n;
        if let Some(prev) = diag.differences.last() {
            diag.ratios.push(if *prev > 0.0 { d / prev } else { 0.0 });
        }
        diag.differences.push(d);
        let norm = next.weighted_norm();
        if norm > radius {
            diag.outside_ball += 1;
        }
        diag.iterate_norms.push(norm);
        if !d.is_finite() {
            return Err(Error::MaxIterExceeded {
                iterations: n,
                residual: d,
            });
        }
        if d < tol {
            diag.residual = d;
            return Ok((cur, diag));
        }
        cur = next;
    }
    Err(Error::MaxIterExceeded {
        iterations: max_iter,
        residual: diag.differences.last().copied().unwrap_or(f64::NAN),
    })
}
