//! Data of the nonlocal delayed problem
//!
//! ```text
//! D^{alpha,beta} xi(t) + A xi(t) = phi(t, xi(sigma(t))),   t in (t0, t0 + a]
//! I^{1-gamma} xi(t0) + sum_k c_k xi(t_k) = xi0
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solution_ops::{hilfer_gamma, Generator};
use crate::trajectory::Trajectory;

/// The nonlinearity `phi(t, u)`. All catalog kinds are autonomous; the
/// componentwise kinds apply the same scalar map to every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinSpec {
    Zero,
    /// `L u`
    Linear(DMatrix<f64>),
    /// `kappa sin(u_i)`
    Sine { kappa: f64 },
    /// `sum_k c_k u_i^k`
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise-linear `u_i -> phi`, held constant outside the table.
    Tabulated { u: Vec<f64>, phi: Vec<f64> },
}

fn table_interp(x: &[f64], y: &[f64], v: f64) -> f64 {
    let last = x.len() - 1;
    if v <= x[0] {
        return y[0];
    }
    if v >= x[last] {
        return y[last];
    }
    let i = match x.binary_search_by(|p| p.total_cmp(&v)) {
        Ok(i) => return y[i],
        Err(i) => i - 1,
    };
    let th = (v - x[i]) / (x[i + 1] - x[i]);
    y[i] + th * (y[i + 1] - y[i])
}

fn table_slopes<'a>(x: &'a [f64], y: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
}

fn check_table(x: &[f64], y: &[f64], field: &str) -> Result<()> {
    let bad = |m: &str| Error::Validation {
        field: field.into(),
        message: m.into(),
    };
    if x.len() != y.len() {
        return Err(bad("table columns have different lengths"));
    }
    if x.len() < 2 {
        return Err(bad("table needs at least two rows"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(bad("table entries must be finite"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("abscissae must be strictly increasing"));
    }
    Ok(())
}

impl NonlinSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            NonlinSpec::Zero => "zero",
            NonlinSpec::Linear(_) => "linear",
            NonlinSpec::Sine { .. } => "sine",
            NonlinSpec::Polynomial { .. } => "polynomial",
            NonlinSpec::Tabulated { .. } => "tabulated",
        }
    }

    pub fn eval(&self, _t: f64, u: &DVector<f64>) -> DVector<f64> {
        match self {
            NonlinSpec::Zero => DVector::zeros(u.len()),
            NonlinSpec::Linear(l) => l * u,
            NonlinSpec::Sine { kappa } => u.map(|x| kappa * x.sin()),
            NonlinSpec::Polynomial { coeffs } => u.map(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)),
            NonlinSpec::Tabulated { u: tu, phi } => u.map(|x| table_interp(tu, phi, x)),
        }
    }

    /// Derivative of the scalar map of a componentwise kind.
    pub fn scalar_derivative(&self, x: f64) -> Option<f64> {
        match self {
            NonlinSpec::Sine { kappa } => Some(kappa * x.cos()),
            NonlinSpec::Polynomial { coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
            ),
            _ => None,
        }
    }

    /// Largest absolute slope of a tabulated map.
    pub fn table_max_slope(&self) -> Option<f64> {
        match self {
            NonlinSpec::Tabulated { u, phi } => Some(table_slopes(u, phi).map(f64::abs).fold(0.0, f64::max)),
            _ => None,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Error::Validation {
            field: "nonlinearity".into(),
            message: m,
        };
        match self {
            NonlinSpec::Zero => Ok(()),
            NonlinSpec::Linear(l) => {
                if l.nrows() != d || l.ncols() != d {
                    return Err(bad(format!("matrix is {}x{}, state dimension is {d}", l.nrows(), l.ncols())));
                }
                if l.iter().any(|x| !x.is_finite()) {
                    return Err(bad("matrix entries must be finite".into()));
                }
                Ok(())
            }
            NonlinSpec::Sine { kappa } if !kappa.is_finite() => Err(bad("kappa must be finite".into())),
            NonlinSpec::Sine { .. } => Ok(()),
            NonlinSpec::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(bad("coefficients must be a non-empty list of finite numbers".into()));
                }
                Ok(())
            }
            NonlinSpec::Tabulated { u, phi } => check_table(u, phi, "nonlinearity"),
        }
    }
}

/// The delay `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelaySpec {
    Identity,
    /// `t0 + q (t - t0)`
    Proportional { q: f64 },
    /// `max(t - tau, t0)`
    Lag { tau: f64 },
    /// Piecewise linear through `(t_i, sigma_i)`.
    Tabulated { t: Vec<f64>, sigma: Vec<f64> },
}

impl DelaySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DelaySpec::Identity => "identity",
            DelaySpec::Proportional { .. } => "proportional",
            DelaySpec::Lag { .. } => "lag",
            DelaySpec::Tabulated { .. } => "tabulated",
        }
    }

    pub fn eval(&self, t0: f64, t: f64) -> f64 {
        match self {
            DelaySpec::Identity => t,
            DelaySpec::Proportional { q } => t0 + q * (t - t0),
            DelaySpec::Lag { tau } => (t - tau).max(t0),
            DelaySpec::Tabulated { t: tt, sigma } => {
                let last = tt.len() - 1;
                let slack = 1e-12 * (tt[last] - tt[0]).abs().max(1.0);
                if t < tt[0] - slack || t > tt[last] + slack {
                    f64::NAN
                } else {
                    table_interp(tt, sigma, t)
                }
            }
        }
    }

    /// `inf sigma'` on the horizon: exact for every kind (a lag has slope
    /// zero on `[t0, t0 + tau]`).
    pub fn derivative_lower_bound(&self) -> f64 {
        match self {
            DelaySpec::Identity => 1.0,
            DelaySpec::Proportional { q } => *q,
            DelaySpec::Lag { tau } => {
                if *tau == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DelaySpec::Tabulated { t, sigma } => table_slopes(t, sigma).fold(f64::INFINITY, f64::min),
        }
    }

    fn validate(&self, t0: f64, a: f64) -> Result<()> {
        let bad = |m: String| Error::Validation {
            field: "delay".into(),
            message: m,
        };
        match self {
            DelaySpec::Identity => {}
            DelaySpec::Proportional { q } => {
                if !(*q > 0.0 && *q <= 1.0) {
                    return Err(bad(format!("proportional factor must lie in (0, 1], got {q}")));
                }
            }
            DelaySpec::Lag { tau } => {
                if !(*tau >= 0.0) || !tau.is_finite() {
                    return Err(bad(format!("lag must be finite and >= 0, got {tau}")));
                }
            }
            DelaySpec::Tabulated { t, sigma } => {
                check_table(t, sigma, "delay")?;
                let slack = 1e-12 * a.max(1.0);
                if t[0] > t0 + slack || t[t.len() - 1] < t0 + a - slack {
                    return Err(bad("table must cover the horizon".into()));
                }
            }
        }
        // sampled range check
        let end = t0 + a;
        let slack = 1e-12 * a.max(1.0);
        for k in 0..=1000 {
            let t = t0 + a * k as f64 / 1000.0;
            let s = self.eval(t0, t);
            if !(s >= t0 - slack && s <= end + slack) {
                return Err(bad(format!("sigma({t}) = {s} leaves the horizon [{t0}, {end}]")));
            }
        }
        Ok(())
    }
}

/// `phi_nl(xi) = sum_k c_k xi(t_k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NonlocalSpec {
    pub anchors: Vec<f64>,
    pub coefficients: Vec<DMatrix<f64>>,
}

impl NonlocalSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Single term `c xi(t)` with a scalar coefficient.
    pub fn single(anchor: f64, c: f64, dim: usize) -> Self {
        Self {
            anchors: vec![anchor],
            coefficients: vec![DMatrix::identity(dim, dim) * c],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| c.iter().all(|x| *x == 0.0))
    }

    pub fn eval(&self, traj: &Trajectory) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(traj.dim());
        for (t, c) in self.anchors.iter().zip(&self.coefficients) {
            acc += c * traj.value_at(*t)?;
        }
        Ok(acc)
    }

    /// `sum_k |c_k|_2 (t_k - t0)^(gamma - 1)`: the Lipschitz constant of the
    /// map in the weighted norm.
    pub fn weighted_lipschitz(&self, t0: f64, gamma: f64) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| spectral_norm(c) * (t - t0).powf(gamma - 1.0))
            .fold(0.0, |acc, x| acc + x)
    }

    fn validate(&self, t0: f64, a: f64, d: usize) -> Result<()> {
        if self.anchors.len() != self.coefficients.len() {
            return Err(Error::Validation {
                field: "nonlocal.coefficients".into(),
                message: format!("{} anchors but {} coefficients", self.anchors.len(), self.coefficients.len()),
            });
        }
        let end = t0 + a;
        let slack = 1e-12 * a.max(1.0);
        for (k, t) in self.anchors.iter().enumerate() {
            if !(*t > t0 && *t <= end + slack) {
                return Err(Error::Validation {
                    field: "nonlocal.anchors".into(),
                    message: format!("anchor {t} lies outside ({t0}, {end}]"),
                });
            }
            if k > 0 && *t <= self.anchors[k - 1] {
                return Err(Error::Validation {
                    field: "nonlocal.anchors".into(),
                    message: "anchors must be strictly increasing".into(),
                });
            }
        }
        for c in &self.coefficients {
            if c.nrows() != d || c.ncols() != d || c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation {
                    field: "nonlocal.coefficients".into(),
                    message: format!("coefficients must be finite {d}x{d} matrices or scalars"),
                });
            }
        }
        Ok(())
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Discretisation and tolerance settings carried with a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    /// Number of grid intervals.
    pub grid_n: usize,
    /// Fixed-point tolerance in the weighted norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Accuracy of every Mittag-Leffler evaluation.
    pub ml_tol: f64,
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid_n: 512,
            tol: 1e-8,
            max_iter: 200,
            ml_tol: 1e-12,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub gen: Generator,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
    pub a: f64,
    pub xi0: DVector<f64>,
    pub nonlin: NonlinSpec,
    pub delay: DelaySpec,
    pub nonlocal: NonlocalSpec,
    pub ball_radius: f64,
    pub numerics: Numerics,
}

impl Problem {
    pub fn gamma(&self) -> f64 {
        hilfer_gamma(self.alpha, self.beta)
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.a
    }

    /// Uniform grid with `n` intervals on the horizon.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::uniform(self.t0, self.a, n)
    }

    /// Grid with `numerics.grid_n` intervals.
    pub fn default_grid(&self) -> Result<Grid> {
        self.grid(self.numerics.grid_n)
    }

    pub fn phi(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        self.nonlin.eval(t, u)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.delay.eval(self.t0, t)
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, m: String| Error::Validation {
            field: field.into(),
            message: m,
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad("orders.alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(bad("orders.beta", format!("must lie in [0, 1], got {}", self.beta)));
        }
        if !self.t0.is_finite() {
            return Err(bad("horizon.t0", "must be finite".into()));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(bad("horizon.a", format!("must be finite and > 0, got {}", self.a)));
        }
        let d = self.dim();
        if self.xi0.len() != d {
            return Err(bad("initial.xi0", format!("has {} entries, generator is {d}x{d}", self.xi0.len())));
        }
        if self.xi0.iter().any(|x| !x.is_finite()) {
            return Err(bad("initial.xi0", "entries must be finite".into()));
        }
        if !(self.ball_radius > 0.0) || !self.ball_radius.is_finite() {
            return Err(bad("initial.ball_radius", format!("must be finite and > 0, got {}", self.ball_radius)));
        }
        self.nonlin.validate(d)?;
        self.delay.validate(self.t0, self.a)?;
        self.nonlocal.validate(self.t0, self.a, d)?;
        let n = &self.numerics;
        if n.grid_n < 2 {
            return Err(bad("numerics.grid_n", format!("must be >= 2, got {}", n.grid_n)));
        }
        if !(n.tol > 0.0) {
            return Err(bad("numerics.tol", format!("must be > 0, got {}", n.tol)));
        }
        if n.max_iter == 0 {
            return Err(bad("numerics.max_iter", "must be >= 1".into()));
        }
        if !(n.ml_tol > 0.0) {
            return Err(bad("numerics.ml_tol", format!("must be > 0, got {}", n.ml_tol)));
        }
        Ok(())
    }
}
