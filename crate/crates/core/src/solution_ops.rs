//! Operator families of the linear problem `D^{alpha,beta} xi + A xi = f`
//! and its solution by the variation-of-constants formula
//!
//! ```text
//! xi(t) = F(t - t0) xi0 + int_{t0}^{t} K(t - s) f(s) ds
//! F(t)  = t^(gamma-1) E_{alpha,gamma}(-A t^alpha)
//! K(t)  = t^(alpha-1) E_{alpha,alpha}(-A t^alpha)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fracops::{ProductRule, SampledFn};
use crate::grid::Grid;
use crate::mlf::{ml_eval_matrix, MLParams};
use crate::trajectory::Trajectory;

/// Hilfer parameter `gamma = alpha + beta (1 - alpha)`.
pub fn hilfer_gamma(alpha: f64, beta: f64) -> f64 {
    alpha + beta * (1.0 - alpha)
}

/// Validates `alpha in (0, 1]`, `beta in [0, 1]`.
pub fn check_orders(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidOrder(alpha));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParams(format!("type beta must lie in [0, 1], got {beta}")));
    }
    Ok(())
}

/// The matrix `A` of the equation; the families are built from `-A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    a: DMatrix<f64>,
}

impl Generator {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidParams("generator must be at least 1x1".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("generator entries must be finite".into()));
        }
        Ok(Self { a })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidParams("generator must be at least 1x1".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::NonSquare { rows: d, cols: r.len() });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn scalar(a0: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, a0))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.a.row(i).iter().copied().collect()).collect()
    }

    fn ml_at(&self, alpha: f64, second: f64, tau: f64, tol: f64) -> Result<DMatrix<f64>> {
        let arg = &self.a * (-tau.powf(alpha));
        Ok(ml_eval_matrix(&MLParams::new(alpha, second).with_tol(tol), &arg)?.value)
    }
}

/// `F` and `K` at a single time `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSample {
    pub t: f64,
    pub f: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("operator families need t > 0, got {t}")));
    }
    Ok(())
}

/// `F_{alpha,beta}(t) = t^(gamma-1) E_{alpha,gamma}(-A t^alpha)`.
pub fn f_operator(gen: &Generator, alpha: f64, beta: f64, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    check_orders(alpha, beta)?;
    check_time(t)?;
    let gamma = hilfer_gamma(alpha, beta);
    Ok(gen.ml_at(alpha, gamma, t, tol)? * t.powf(gamma - 1.0))
}

/// `K_alpha(t) = t^(alpha-1) E_{alpha,alpha}(-A t^alpha)`.
pub fn k_operator(gen: &Generator, alpha: f64, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    check_orders(alpha, 0.0)?;
    check_time(t)?;
    Ok(gen.ml_at(alpha, alpha, t, tol)? * t.powf(alpha - 1.0))
}

/// Weighted family `t^(1-gamma) F(t) = E_{alpha,gamma}(-A t^alpha)`, finite at `t = 0`
/// where it equals `I / Gamma(gamma)`.
pub fn f_operator_weighted(gen: &Generator, alpha: f64, beta: f64, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    check_orders(alpha, beta)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("need t >= 0, got {t}")));
    }
    gen.ml_at(alpha, hilfer_gamma(alpha, beta), t, tol)
}

pub fn operator_sample(gen: &Generator, alpha: f64, beta: f64, t: f64, tol: f64) -> Result<OperatorSample> {
    Ok(OperatorSample {
        t,
        f: f_operator(gen, alpha, beta, t, tol)?,
        k: k_operator(gen, alpha, t, tol)?,
    })
}

enum KernelTable {
    /// `E_{alpha,alpha}(-A (k h)^alpha)` for `k = 0..=N`.
    ByLag(Vec<DMatrix<f64>>),
    /// Row `j` holds the matrices for lags `tau_j - tau_i`, `i <= j`.
    ByPair(Vec<Vec<DMatrix<f64>>>),
}

/// Operator samples and quadrature weights on a fixed grid, shared by the
/// linear solver and the fixed-point sweeps.
pub(crate) struct Evolution {
    pub(crate) grid: Grid,
    pub(crate) gamma: f64,
    /// `E_{alpha,gamma}(-A (tau_j - t0)^alpha)` per node.
    pub(crate) f_weighted: Vec<DMatrix<f64>>,
    kernel: KernelTable,
    rule: ProductRule,
    dim: usize,
}

impl Evolution {
    pub(crate) fn new(gen: &Generator, alpha: f64, beta: f64, grid: &Grid, tol: f64) -> Result<Self> {
        check_orders(alpha, beta)?;
        let n = grid.len();
        let elapsed: Vec<f64> = (0..n).map(|i| grid.elapsed(i)).collect();
        let gamma = hilfer_gamma(alpha, beta);
        let f_weighted = elapsed
            .iter()
            .map(|&tau| gen.ml_at(alpha, gamma, tau, tol))
            .collect::<Result<Vec<_>>>()?;
        let kernel = if grid.is_uniform() {
            if alpha == gamma {
                KernelTable::ByLag(f_weighted.clone())
            } else {
                KernelTable::ByLag(
                    elapsed
                        .iter()
                        .map(|&tau| gen.ml_at(alpha, alpha, tau, tol))
                        .collect::<Result<_>>()?,
                )
            }
        } else {
            let mut rows = Vec::with_capacity(n);
            for j in 0..n {
                rows.push(
                    (0..=j)
                        .map(|i| gen.ml_at(alpha, alpha, grid.nodes()[j] - grid.nodes()[i], tol))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            KernelTable::ByPair(rows)
        };
        Ok(Self {
            grid: grid.clone(),
            gamma,
            f_weighted,
            kernel,
            rule: ProductRule::new(elapsed, alpha),
            dim: gen.dim(),
        })
    }

    fn kernel(&self, j: usize, i: usize) -> &DMatrix<f64> {
        match &self.kernel {
            KernelTable::ByLag(m) => &m[j - i],
            KernelTable::ByPair(rows) => &rows[j][i],
        }
    }

    /// `int_{t0}^{tau_j} K(tau_j - s) g(s) ds` for nodal samples of `g`.
    ///
    /// A `None` sample marks a node where `g` is undefined (a delayed argument
    /// hitting the singular end point); its panel uses the other end's product
    /// for both ends.
    pub(crate) fn convolve(&self, j: usize, g: &[Option<DVector<f64>>]) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(self.dim);
        let mut left = DVector::zeros(self.dim);
        let mut right = DVector::zeros(self.dim);
        for i in 0..j {
            let (wl, wr) = self.rule.panel(j, i);
            match (&g[i], &g[i + 1]) {
                (Some(gl), Some(gr)) => {
                    acc.gemv(wl, self.kernel(j, i), gl, 1.0);
                    acc.gemv(wr, self.kernel(j, i + 1), gr, 1.0);
                }
                (None, Some(gr)) => {
                    right.gemv(1.0, self.kernel(j, i + 1), gr, 0.0);
                    acc.axpy(wl + wr, &right, 1.0);
                }
                (Some(gl), None) => {
                    left.gemv(1.0, self.kernel(j, i), gl, 0.0);
                    acc.axpy(wl + wr, &left, 1.0);
                }
                (None, None) => return Err(Error::SingularEndpoint { gamma: self.gamma }),
            }
        }
        Ok(acc)
    }

    /// Weighted node values of `F(t - t0) v + int K g`.
    pub(crate) fn assemble(&self, v: &DVector<f64>, g: &[Option<DVector<f64>>]) -> Result<Vec<DVector<f64>>> {
        (0..self.grid.len())
            .map(|j| {
                let mut x = &self.f_weighted[j] * v;
                if j > 0 {
                    let w = if self.gamma == 1.0 {
                        1.0
                    } else {
                        self.grid.elapsed(j).powf(1.0 - self.gamma)
                    };
                    x.axpy(w, &self.convolve(j, g)?, 1.0);
                }
                Ok(x)
            })
            .collect()
    }
}

/// Solves `D^{alpha,beta} xi + A xi = f`, `I^{1-gamma} xi(t0) = xi0` on the forcing's grid.
///
/// The result is in weighted form; node `t0` holds `E_{alpha,gamma}(0) xi0 = xi0 / Gamma(gamma)`.
pub fn solve_linear(
    gen: &Generator,
    alpha: f64,
    beta: f64,
    xi0: &DVector<f64>,
    forcing: &SampledFn,
    grid: &Grid,
    tol: f64,
) -> Result<Trajectory> {
    if &forcing.grid != grid {
        return Err(Error::DimensionMismatch("forcing is sampled on a different grid".into()));
    }
    if forcing.is_weighted() {
        return Err(Error::InvalidParams("forcing must be bounded at t0".into()));
    }
    if xi0.len() != gen.dim() || forcing.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "generator is {d}x{d}, xi0 has {} entries, forcing has {}",
            xi0.len(),
            forcing.dim(),
            d = gen.dim()
        )));
    }
    let evo = Evolution::new(gen, alpha, beta, grid, tol)?;
    let g: Vec<Option<DVector<f64>>> = forcing.values.iter().cloned().map(Some).collect();
    Trajectory::new(grid.clone(), evo.assemble(xi0, &g)?, evo.gamma)
}
