use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fracops::SampledFn;
use crate::grid::Grid;

/// Element of the weighted space `C_{1-gamma}` sampled on a grid.
///
/// Node `i` stores `w(tau_i) xi(tau_i)` with `w(t) = (t - t0)^(1-gamma)`; at
/// `tau_0` that is the weighted limit, finite even when `xi` itself blows up.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub weighted_values: Vec<DVector<f64>>,
    pub gamma: f64,
}

impl Trajectory {
    pub fn new(grid: Grid, weighted_values: Vec<DVector<f64>>, gamma: f64) -> Result<Self> {
        if weighted_values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                weighted_values.len(),
                grid.len()
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParams(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        let d = weighted_values[0].len();
        if weighted_values.iter().any(|v| v.len() != d) {
            return Err(Error::DimensionMismatch("values have differing lengths".into()));
        }
        Ok(Self {
            grid,
            weighted_values,
            gamma,
        })
    }

    pub fn zeros(grid: Grid, dim: usize, gamma: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![DVector::zeros(dim); n], gamma)
    }

    /// Builds the weighted samples from an unweighted function defined for `t > t0`
    /// and its weighted limit at `t0`.
    pub fn from_fn(grid: Grid, gamma: f64, limit_at_t0: DVector<f64>, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let mut values = vec![limit_at_t0];
        for i in 1..grid.len() {
            let t = grid.nodes()[i];
            values.push(f(t) * grid.elapsed(i).powf(1.0 - gamma));
        }
        Self::new(grid, values, gamma)
    }

    pub fn dim(&self) -> usize {
        self.weighted_values[0].len()
    }

    pub fn len(&self) -> usize {
        self.weighted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weighted_values.is_empty()
    }

    /// `(t - t0)^(1-gamma)`.
    pub fn weight(&self, t: f64) -> f64 {
        if self.gamma == 1.0 {
            1.0
        } else {
            (t - self.grid.t0()).max(0.0).powf(1.0 - self.gamma)
        }
    }

    pub fn node_weight(&self, i: usize) -> f64 {
        if self.gamma == 1.0 {
            1.0
        } else {
            self.grid.elapsed(i).powf(1.0 - self.gamma)
        }
    }

    /// Unweighted value at node `i`.
    pub fn value(&self, i: usize) -> Result<DVector<f64>> {
        if self.gamma == 1.0 {
            Ok(self.weighted_values[i].clone())
        } else if i == 0 {
            Err(Error::SingularEndpoint { gamma: self.gamma })
        } else {
            Ok(&self.weighted_values[i] / self.node_weight(i))
        }
    }

    /// Linear interpolation of the weighted values; `None` outside the horizon.
    pub fn weighted_at(&self, t: f64) -> Option<DVector<f64>> {
        let (i, theta) = self.grid.locate(t)?;
        Some(if theta == 0.0 {
            self.weighted_values[i].clone()
        } else if theta == 1.0 {
            self.weighted_values[i + 1].clone()
        } else {
            &self.weighted_values[i] * (1.0 - theta) + &self.weighted_values[i + 1] * theta
        })
    }

    /// Unweighted value at an arbitrary time (interpolated in weighted form).
    pub fn value_at(&self, t: f64) -> Result<DVector<f64>> {
        let wv = self.weighted_at(t).ok_or(Error::DelayOutOfRange { s: t, sigma: t })?;
        let w = self.weight(t);
        if self.gamma == 1.0 {
            Ok(wv)
        } else if w == 0.0 {
            Err(Error::SingularEndpoint { gamma: self.gamma })
        } else {
            Ok(wv / w)
        }
    }

    /// Maximum Euclidean norm of the weighted values (the `C_{1-gamma}` norm).
    pub fn weighted_norm(&self) -> f64 {
        self.weighted_values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `self - other` on the same grid.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("trajectories live on different grids".into()));
        }
        let values = self
            .weighted_values
            .iter()
            .zip(&other.weighted_values)
            .map(|(a, b)| a - b)
            .collect();
        Trajectory::new(self.grid.clone(), values, self.gamma)
    }

    /// Weighted distance `|self - other|_{C_{1-gamma}}`.
    pub fn distance(&self, other: &Trajectory) -> Result<f64> {
        Ok(self.difference(other)?.weighted_norm())
    }

    pub fn to_sampled(&self) -> Result<SampledFn> {
        SampledFn::weighted(self.grid.clone(), self.weighted_values.clone(), 1.0 - self.gamma)
    }
}

/// `|traj|_{C_{1-gamma}}`: max over nodes of the Euclidean norm of the weighted values.
pub fn weighted_norm(traj: &Trajectory) -> f64 {
    traj.weighted_norm()
}
