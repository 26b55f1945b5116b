use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time nodes `t0 = tau_0 < ... < tau_N = t0 + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    t0: f64,
    a: f64,
    uniform: bool,
}

impl Grid {
    /// `n` equal intervals on `[t0, t0 + a]` (so `n + 1` nodes).
    pub fn uniform(t0: f64, a: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 intervals, got {n}")));
        }
        if !(a > 0.0) || !a.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be finite with a > 0, got t0 = {t0}, a = {a}")));
        }
        let h = a / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * h).collect();
        nodes[n] = t0 + a;
        Ok(Self {
            nodes,
            t0,
            a,
            uniform: true,
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("nodes not strictly increasing at index {}", i + 1)));
        }
        let t0 = nodes[0];
        let a = nodes[nodes.len() - 1] - t0;
        let h = a / (nodes.len() - 1) as f64;
        let uniform = nodes
            .iter()
            .enumerate()
            .all(|(i, t)| (t - (t0 + i as f64 * h)).abs() <= 1e-12 * a.max(1.0));
        Ok(Self { nodes, t0, a, uniform })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of nodes (`N + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Step size of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.uniform.then(|| self.a / self.intervals() as f64)
    }

    /// Elapsed time `tau_i - t0`.
    pub fn elapsed(&self, i: usize) -> f64 {
        if self.uniform {
            self.a * i as f64 / self.intervals() as f64
        } else {
            self.nodes[i] - self.t0
        }
    }

    /// Interval containing `t` and the barycentric weight of its right end.
    /// Returns `None` when `t` lies outside the horizon (with a relative slack of 1e-12).
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let slack = 1e-12 * self.a.max(1.0);
        if !(t >= self.t0 - slack && t <= self.end() + slack) {
            return None;
        }
        let n = self.intervals();
        let t = t.clamp(self.t0, self.end());
        let i = if self.uniform {
            (((t - self.t0) / self.a * n as f64).floor() as usize).min(n - 1)
        } else {
            match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
                Ok(i) => i.min(n - 1),
                Err(i) => i.saturating_sub(1).min(n - 1),
            }
        };
        let (l, r) = (self.nodes[i], self.nodes[i + 1]);
        let theta = ((t - l) / (r - l)).clamp(0.0, 1.0);
        // snap to nodes so that values at nodes are reproduced exactly
        if theta <= 1e-12 {
            Some((i, 0.0))
        } else if theta >= 1.0 - 1e-12 {
            Some((i, 1.0))
        } else {
            Some((i, theta))
        }
    }
}
