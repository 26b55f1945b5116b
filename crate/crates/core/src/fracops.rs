//! Discrete psi-Riemann-Liouville integrals and psi-Hilfer derivatives.
//!
//! The integral
//!
//! ```text
//! I^mu f(t) = 1/Gamma(mu) * int_{t0}^{t} (psi(t) - psi(s))^(mu-1) psi'(s) f(s) ds
//! ```
//!
//! is computed by product integration in the variable `u = psi(s)`: the
//! kernel moments are exact and `f` is interpolated linearly in `u`, so the
//! rule is exact for piecewise-linear integrands and second-order for smooth
//! ones, with no special treatment of the endpoint singularity.
//!
//! Functions that blow up like `(t - t0)^(-w)` at `t0` (the elements of the
//! weighted space `C_{1-gamma}`, with `w = 1 - gamma`) are carried in weighted
//! form, see [`SampledFn::weighted`]. Their integrals use exact moments of
//! `(t - s)^(mu-1) (s - t0)^(-w)` against the piecewise-linear weighted values
//! (series on the two end panels, Gauss-Legendre on the interior ones).

use std::sync::OnceLock;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::special::{gamma, rgamma};

/// Number of leading nodes whose derivative values use one-sided stencils.
pub const BOUNDARY_NODES: usize = 1;

/// Increasing reparametrisation `psi` of the time axis.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiMap {
    Identity,
    /// `psi(t) = t^p`, `p > 0` (needs `t > 0` on the grid unless `p = 1`).
    Power(f64),
    /// `psi(t) = ln(t + c)`, `c > 0`.
    LogShift(f64),
    /// Piecewise-linear table `(t, psi(t))`.
    Tabulated { t: Vec<f64>, psi: Vec<f64> },
}

impl PsiMap {
    /// Parses a two-column whitespace- or comma-separated table; `#` starts a comment.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut psi = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: Some(lineno + 1),
                    field: Some("psi".into()),
                    message: format!("`{s}`: {e}"),
                })
            };
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: Some(lineno + 1),
                    field: Some("psi".into()),
                    message: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            t.push(parse(cols[0])?);
            psi.push(parse(cols[1])?);
        }
        if t.len() < 2 {
            return Err(Error::Parse {
                line: None,
                field: Some("psi".into()),
                message: "table needs at least two rows".into(),
            });
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Parse {
                line: None,
                field: Some("psi".into()),
                message: format!("t column not increasing at row {}", i + 2),
            });
        }
        Ok(PsiMap::Tabulated { t, psi })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, PsiMap::Identity) || matches!(self, PsiMap::Power(p) if *p == 1.0)
    }

    fn table_segment(t_tab: &[f64], t: f64) -> Option<usize> {
        let last = t_tab.len() - 1;
        let slack = 1e-12 * (t_tab[last] - t_tab[0]).abs().max(1.0);
        if t < t_tab[0] - slack || t > t_tab[last] + slack {
            return None;
        }
        Some(match t_tab.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(last - 1),
            Err(i) => i.saturating_sub(1).min(last - 1),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PsiMap::Identity => t,
            PsiMap::Power(p) => t.powf(*p),
            PsiMap::LogShift(c) => (t + c).ln(),
            PsiMap::Tabulated { t: tt, psi } => match Self::table_segment(tt, t) {
                Some(i) => {
                    let th = (t - tt[i]) / (tt[i + 1] - tt[i]);
                    psi[i] + th * (psi[i + 1] - psi[i])
                }
                None => f64::NAN,
            },
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            PsiMap::Identity => 1.0,
            PsiMap::Power(p) => p * t.powf(p - 1.0),
            PsiMap::LogShift(c) => 1.0 / (t + c),
            PsiMap::Tabulated { t: tt, psi } => match Self::table_segment(tt, t) {
                Some(i) => {
                    let slope = |k: usize| (psi[k + 1] - psi[k]) / (tt[k + 1] - tt[k]);
                    // average the two slopes at interior table nodes
                    if t == tt[i] && i > 0 {
                        0.5 * (slope(i - 1) + slope(i))
                    } else {
                        slope(i)
                    }
                }
                None => f64::NAN,
            },
        }
    }

    /// Checks that `psi` is strictly increasing with `psi' > 0` on the grid
    /// and returns the transformed nodes `u_i = psi(tau_i)`.
    pub fn transform(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            PsiMap::Power(p) if !(*p > 0.0) => return Err(Error::InvalidParams(format!("power psi needs p > 0, got {p}"))),
            PsiMap::LogShift(c) if !(*c > 0.0) => return Err(Error::InvalidParams(format!("log-shift psi needs c > 0, got {c}"))),
            _ => {}
        }
        let u: Vec<f64> = grid.nodes().iter().map(|&t| self.eval(t)).collect();
        for (i, &t) in grid.nodes().iter().enumerate() {
            let d = self.derivative(t);
            if !u[i].is_finite() || !(d > 0.0) || !d.is_finite() {
                return Err(Error::NonMonotonePsi { node: i });
            }
            if i > 0 && u[i] <= u[i - 1] {
                return Err(Error::NonMonotonePsi { node: i });
            }
        }
        Ok(u)
    }
}

/// Vector-valued function sampled on a grid.
///
/// With `weight_exp = w > 0` the stored values are `(t - t0)^w f(t)`, which
/// stay finite at `t0` even though `f` itself does not.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    pub grid: Grid,
    pub values: Vec<DVector<f64>>,
    pub weight_exp: f64,
}

impl SampledFn {
    pub fn new(grid: Grid, values: Vec<DVector<f64>>) -> Result<Self> {
        Self::weighted(grid, values, 0.0)
    }

    pub fn weighted(grid: Grid, values: Vec<DVector<f64>>, weight_exp: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let d = values[0].len();
        if values.iter().any(|v| v.len() != d) {
            return Err(Error::DimensionMismatch("values have differing lengths".into()));
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidParams("sampled values must be finite".into()));
        }
        if !(0.0..1.0).contains(&weight_exp) {
            return Err(Error::InvalidParams(format!("weight exponent must lie in [0, 1), got {weight_exp}")));
        }
        Ok(Self {
            grid,
            values,
            weight_exp,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| DVector::from_element(1, v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_weighted(&self) -> bool {
        self.weight_exp > 0.0
    }

    /// Unweighted value at node `i`; `None` at `t0` for a weighted function.
    pub fn value(&self, i: usize) -> Option<DVector<f64>> {
        if self.weight_exp == 0.0 {
            Some(self.values[i].clone())
        } else if i == 0 {
            None
        } else {
            Some(&self.values[i] / self.grid.elapsed(i).powf(self.weight_exp))
        }
    }

    /// First component at every node (unweighted; `NaN` where undefined).
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.value(i).map_or(f64::NAN, |v| v[c]))
            .collect()
    }
}

/// Product-integration weights for `int_{u_0}^{u_j} (u_j - u)^(mu-1) l(u) du`
/// with `l` piecewise linear. Panel `i` covers `[u_i, u_{i+1}]`.
pub(crate) struct ProductRule {
    mu: f64,
    u: Vec<f64>,
    /// Unit-step weights by lag `j - i` when the nodes are equispaced in `u`.
    by_lag: Option<(f64, Vec<(f64, f64)>)>,
}

impl ProductRule {
    pub(crate) fn new(u: Vec<f64>, mu: f64) -> Self {
        let n = u.len() - 1;
        let h = (u[n] - u[0]) / n as f64;
        let equispaced = u
            .iter()
            .enumerate()
            .all(|(i, x)| (x - (u[0] + i as f64 * h)).abs() <= 1e-12 * (u[n] - u[0]).abs().max(1e-300));
        let by_lag = equispaced.then(|| {
            let w = (1..=n)
                .map(|lag| Self::moments(lag as f64, lag as f64 - 1.0, 1.0, mu))
                .collect();
            (h.powf(mu), w)
        });
        Self { mu, u, by_lag }
    }

    fn moments(a: f64, b: f64, h: f64, mu: f64) -> (f64, f64) {
        let m0 = (a.powf(mu) - b.powf(mu)) / mu;
        let m1 = a * m0 - (a.powf(mu + 1.0) - b.powf(mu + 1.0)) / (mu + 1.0);
        (m0 - m1 / h, m1 / h)
    }

    /// `(left, right)` weights of panel `i < j` for target node `j`.
    pub(crate) fn panel(&self, j: usize, i: usize) -> (f64, f64) {
        debug_assert!(i < j);
        match &self.by_lag {
            Some((scale, w)) => {
                let (l, r) = w[j - i - 1];
                (scale * l, scale * r)
            }
            None => {
                let u = &self.u;
                Self::moments(u[j] - u[i], u[j] - u[i + 1], u[i + 1] - u[i], self.mu)
            }
        }
    }

    /// Nodal weights for target `j` (panels summed in increasing order).
    pub(crate) fn node_weights(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; j + 1];
        for i in 0..j {
            let (l, r) = self.panel(j, i);
            w[i] += l;
            w[i + 1] += r;
        }
        w
    }
}

fn check_order(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidOrder(mu));
    }
    Ok(())
}

/// Fractional integral `I^mu_psi f` at every node; zero at `t0` for regular `f`.
///
/// For a weighted input (`f ~ (t - t0)^(-w)`), `psi` must be the identity and
/// the output is weighted with exponent `max(w - mu, 0)`; its value at `t0` is
/// the limit `v(t0) Gamma(1 - w) / Gamma(1 - w + mu)` when `mu <= w`.
pub fn rl_integral(f: &SampledFn, mu: f64, psi: &PsiMap) -> Result<SampledFn> {
    check_order(mu)?;
    let u = psi.transform(&f.grid)?;
    if f.is_weighted() {
        if !psi.is_identity() {
            return Err(Error::InvalidParams(
                "weighted integrands are supported for psi = identity only".into(),
            ));
        }
        return weighted_integral(f, mu);
    }
    let rule = ProductRule::new(u, mu);
    let d = f.dim();
    let rg = rgamma(mu);
    let values = (0..f.grid.len())
        .map(|j| {
            let mut acc = DVector::zeros(d);
            for (i, w) in rule.node_weights(j).into_iter().enumerate() {
                acc.axpy(w, &f.values[i], 1.0);
            }
            acc * rg
        })
        .collect();
    SampledFn::new(f.grid.clone(), values)
}

fn weighted_integral(f: &SampledFn, mu: f64) -> Result<SampledFn> {
    let w = f.weight_exp;
    let kappa = 1.0 - w;
    let grid = &f.grid;
    let n = grid.len();
    let d = f.dim();
    let s: Vec<f64> = (0..n).map(|i| grid.elapsed(i)).collect();
    let rg = rgamma(mu);
    // orders that agree to rounding (e.g. 1 - gamma and (1-beta)(1-alpha)) give a regular result
    let same = (w - mu).abs() <= 1e-12;
    let out_exp = if same { 0.0 } else { (w - mu).max(0.0) };

    let mut values = Vec::with_capacity(n);
    values.push(if same {
        &f.values[0] * gamma(kappa)
    } else if mu < w {
        &f.values[0] * (gamma(kappa) * rgamma(kappa + mu))
    } else {
        DVector::zeros(d)
    });
    for j in 1..n {
        let t = s[j];
        let mut acc = DVector::zeros(d);
        for i in 0..j {
            let h = s[i + 1] - s[i];
            let (p0, p1) = weighted_panel(t, s[i], s[i + 1], i == 0, i + 1 == j, mu, w);
            acc.axpy(p0 - p1 / h, &f.values[i], 1.0);
            acc.axpy(p1 / h, &f.values[i + 1], 1.0);
        }
        acc *= rg;
        if out_exp > 0.0 {
            acc *= t.powf(out_exp);
        }
        values.push(acc);
    }
    SampledFn::weighted(grid.clone(), values, out_exp)
}

/// `(int K, int K (s - l))` over `[l, r]` for `K(s) = (t - s)^(mu-1) s^(-w)`.
fn weighted_panel(t: f64, l: f64, r: f64, first: bool, last: bool, mu: f64, w: f64) -> (f64, f64) {
    const MAX_TERMS: usize = 4000;
    let h = r - l;
    match (first, last) {
        (true, true) => (
            t.powf(mu - w) * beta_fn(mu, 1.0 - w),
            t.powf(mu + 1.0 - w) * beta_fn(mu, 2.0 - w),
        ),
        (true, false) => {
            // (t - s)^(mu-1) = t^(mu-1) sum_n c_n (s/t)^n
            let x = h / t;
            let (mut p0, mut p1) = (0.0, 0.0);
            let mut c = 1.0;
            let mut xn = 1.0;
            for k in 0..MAX_TERMS {
                let kf = k as f64;
                let t0 = c * xn / (kf + 1.0 - w);
                let t1 = c * xn / (kf + 2.0 - w);
                p0 += t0;
                p1 += t1;
                if t0.abs() <= 1e-17 * p0.abs() && k > 2 {
                    break;
                }
                c *= (kf + 1.0 - mu) / (kf + 1.0);
                xn *= x;
            }
            let base = t.powf(mu - 1.0) * h.powf(1.0 - w);
            (base * p0, base * h * p1)
        }
        (false, true) => {
            // s^(-w) = t^(-w) sum_n d_n (r/t)^n with r = t - s in [0, h]
            let x = h / t;
            let (mut p0, mut p1) = (0.0, 0.0);
            let mut c = 1.0;
            let mut xn = 1.0;
            for k in 0..MAX_TERMS {
                let e = mu + k as f64;
                let t0 = c * xn / e;
                let t1 = c * xn / (e * (e + 1.0));
                p0 += t0;
                p1 += t1;
                if t0.abs() <= 1e-17 * p0.abs() && k > 2 {
                    break;
                }
                c *= (k as f64 + w) / (k as f64 + 1.0);
                xn *= x;
            }
            let base = t.powf(-w) * h.powf(mu);
            (base * p0, base * h * p1)
        }
        (false, false) => {
            // smooth integrand; enough Gauss points for the nearest singularity
            let centre = 0.5 * (l + r);
            let dist = (centre).min(t - centre) / (0.5 * h);
            let rho = dist + (dist * dist - 1.0).max(0.0).sqrt();
            let npts = ((18.5 / rho.ln()).ceil() as usize).clamp(2, MAX_GAUSS);
            let (x, wt) = gauss_legendre(npts);
            let (mut p0, mut p1) = (0.0, 0.0);
            for (xi, wi) in x.iter().zip(wt) {
                let sv = centre + 0.5 * h * xi;
                let k = (t - sv).powf(mu - 1.0) * sv.powf(-w) * wi;
                p0 += k;
                p1 += k * (sv - l);
            }
            (0.5 * h * p0, 0.5 * h * p1)
        }
    }
}

fn beta_fn(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) * rgamma(a + b)
}

const MAX_GAUSS: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, cached per order.
fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = CACHE.get_or_init(|| (0..=MAX_GAUSS).map(legendre_rule).collect());
    &table[n]
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Second-order derivative with respect to `u` on a non-uniform mesh;
/// central in the interior and one-sided at both ends.
pub(crate) fn differentiate(u: &[f64], z: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = u.len();
    let three_point = |i0: usize, at: usize| {
        let (a, b, c) = (u[i0], u[i0 + 1], u[i0 + 2]);
        let x = u[at];
        // derivative of the quadratic through (a, b, c) at x
        let wa = ((x - b) + (x - c)) / ((a - b) * (a - c));
        let wb = ((x - a) + (x - c)) / ((b - a) * (b - c));
        let wc = ((x - a) + (x - b)) / ((c - a) * (c - b));
        &z[i0] * wa + &z[i0 + 1] * wb + &z[i0 + 2] * wc
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                three_point(0, 0)
            } else if i == n - 1 {
                three_point(n - 3, n - 1)
            } else {
                three_point(i - 1, i)
            }
        })
        .collect()
}

/// psi-Hilfer derivative of order `alpha` and type `beta`,
/// `I^{beta(1-alpha)} (1/psi' d/dt) I^{(1-beta)(1-alpha)} f`.
///
/// The outer integral is applied before differencing, through
/// `I^nu(y') = d/dt I^nu(y - y(t0))`, so no derivative sample at the singular
/// end point is ever integrated. Values at the first node come from a
/// one-sided stencil and are excluded from residual norms.
pub fn hilfer_derivative(f: &SampledFn, alpha: f64, beta: f64, psi: &PsiMap) -> Result<SampledFn> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidOrder(alpha));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParams(format!("type beta must lie in [0, 1], got {beta}")));
    }
    let u = psi.transform(&f.grid)?;
    let inner = (1.0 - beta) * (1.0 - alpha);
    let outer = beta * (1.0 - alpha);

    let y = if inner > 0.0 { rl_integral(f, inner, psi)? } else { f.clone() };
    if y.is_weighted() {
        return Err(Error::InvalidParams(format!(
            "function is too singular at t0 (weight exponent {}) for a derivative of this type",
            f.weight_exp
        )));
    }
    let y0 = y.values[0].clone();
    let shifted = SampledFn::new(y.grid.clone(), y.values.iter().map(|v| v - &y0).collect())?;
    let z = if outer > 0.0 {
        rl_integral(&shifted, outer, psi)?
    } else {
        shifted
    };
    SampledFn::new(f.grid.clone(), differentiate(&u, &z.values))
}
