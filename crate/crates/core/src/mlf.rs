//! Two-parameter Mittag-Leffler function
//!
//! ```text
//! E_{a,b}(z) = sum_{k>=0} z^k / Gamma(a k + b)
//! ```
//!
//! evaluated by direct summation for scalar (real or complex) and square
//! matrix arguments. The one-parameter function is `E_a = E_{a,1}`.
//!
//! Every result carries `err_bound`, a certified bound on the truncation
//! error. Once `a k + b > 0` the term ratio
//! `|z| Gamma(a k + b) / Gamma(a k + a + b)` is non-increasing in `k`
//! (log-convexity of Gamma), so the remainder after term `K` is bounded by the
//! geometric series started at term `K + 1`. For matrices the same bound is
//! applied to the Frobenius norm, which dominates the spectral norm and is
//! submultiplicative.
//!
//! Floating-point rounding is not part of the certificate. It is reported
//! separately in [`MLResult::rounding`] as a first-order estimate; it matters
//! for negative arguments of large modulus where the series cancels. When it
//! exceeds `max_rounding * max(1, |value|)` the evaluation fails with
//! [`Error::PrecisionLoss`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{gamma_sign, ln_gamma, rgamma};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: usize = 5_000;
/// Arguments with modulus (Frobenius norm for matrices) above this are rejected.
pub const DEFAULT_THRESHOLD: f64 = 10.0;
pub const DEFAULT_MAX_ROUNDING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
    /// Requested absolute accuracy of the truncated series.
    pub tol: f64,
    pub max_terms: usize,
    pub threshold: f64,
    /// Largest accepted rounding estimate, relative to `max(1, |value|)`.
    pub max_rounding: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            tol: DEFAULT_TOL,
            max_terms: DEFAULT_MAX_TERMS,
            threshold: DEFAULT_THRESHOLD,
            max_rounding: DEFAULT_MAX_ROUNDING,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_max_rounding(mut self, max_rounding: f64) -> Self {
        self.max_rounding = max_rounding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be finite, got {}", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.max_rounding > 0.0) {
            return Err(Error::InvalidParams(format!("max_rounding must be > 0, got {}", self.max_rounding)));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MLResult<T> {
    pub value: T,
    /// Certified bound on the truncation error (`<= tol` on success).
    pub err_bound: f64,
    /// First-order estimate of accumulated floating-point error.
    pub rounding: f64,
    pub terms_used: usize,
}

/// `|z|^k / |Gamma(a k + b)|`, the sign of `1/Gamma`, and a relative error estimate.
fn term_magnitude(alpha: f64, beta: f64, r: f64, k: usize) -> (f64, f64, f64) {
    let x = alpha * k as f64 + beta;
    let sign = gamma_sign(x);
    if sign == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    // relative error of the Gamma approximation grows like x ln x
    let gamma_rel = f64::EPSILON * x.abs() * x.abs().max(1.0).ln();
    if k == 0 {
        return (rgamma(x).abs(), sign, gamma_rel);
    }
    if r == 0.0 {
        return (0.0, sign, 0.0);
    }
    let log_pow = k as f64 * r.ln();
    if x < 170.0 && log_pow.abs() < 600.0 {
        let pow_rel = f64::EPSILON * (k as f64).log2().ceil();
        (r.powi(k as i32) * rgamma(x).abs(), sign, gamma_rel + pow_rel)
    } else {
        let lg = ln_gamma(x);
        let mag = (log_pow - lg).exp();
        (mag, sign, f64::EPSILON * (log_pow.abs() + lg.abs()))
    }
}

/// Drives the series: `accumulate(k, c, rel)` must add `c * unit_k` where
/// `unit_k` has norm at most one (`sign(z)^k`, `exp(i k arg z)`, `(M/|M|)^k`)
/// and `rel` is the relative error of `c`.
fn sum_series(params: &MLParams, r: f64, mut accumulate: impl FnMut(usize, f64, f64)) -> Result<(f64, usize)> {
    params.validate()?;
    if !r.is_finite() || r > params.threshold {
        return Err(Error::NonConvergence {
            terms: 0,
            err_bound: f64::INFINITY,
            tol: params.tol,
        });
    }
    let MLParams { alpha, beta, tol, .. } = *params;
    let mut abs_sum = 0.0;
    let mut last_tail = f64::INFINITY;
    let mut current = term_magnitude(alpha, beta, r, 0);

    for k in 0..params.max_terms {
        let (mag, sign, rel) = current;
        accumulate(k, sign * mag, rel);
        abs_sum += mag;

        current = term_magnitude(alpha, beta, r, k + 1);
        let x_next = alpha * (k + 1) as f64 + beta;
        if x_next <= 0.0 {
            continue;
        }
        let tail = if r == 0.0 {
            0.0
        } else {
            let ratio = r * (ln_gamma(x_next) - ln_gamma(x_next + alpha)).exp();
            if ratio < 1.0 {
                current.0 / (1.0 - ratio)
            } else {
                f64::INFINITY
            }
        };
        last_tail = tail;
        // stop once the tail is below tol and can no longer change the rounded sum
        if tail <= 0.01 * tol && (tail == 0.0 || tail <= 0.5 * f64::EPSILON * abs_sum) {
            return Ok((tail, k + 1));
        }
    }
    Err(Error::NonConvergence {
        terms: params.max_terms,
        err_bound: last_tail,
        tol,
    })
}

fn check_rounding(params: &MLParams, rounding: f64, size: f64) -> Result<()> {
    if rounding > params.max_rounding * size.max(1.0) {
        return Err(Error::PrecisionLoss { rounding, value: size });
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// `E_{alpha,beta}(z)` for real `z`.
pub fn ml_eval(params: &MLParams, z: f64) -> Result<MLResult<f64>> {
    if !z.is_finite() {
        return Err(Error::InvalidParams(format!("argument must be finite, got {z}")));
    }
    let neg = z < 0.0;
    let mut acc = Compensated::default();
    let mut rounding = 0.0;
    let (err_bound, terms_used) = sum_series(params, z.abs(), |k, c, rel| {
        acc.add(if neg && k % 2 == 1 { -c } else { c });
        rounding += (rel + 4.0 * f64::EPSILON) * c.abs();
    })?;
    check_rounding(params, rounding, acc.value().abs())?;
    Ok(MLResult {
        value: acc.value(),
        err_bound,
        rounding,
        terms_used,
    })
}

/// `E_{alpha,beta}(z)` for complex `z`.
pub fn ml_eval_complex(params: &MLParams, z: Complex64) -> Result<MLResult<Complex64>> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidParams(format!("argument must be finite, got {z}")));
    }
    let theta = z.arg();
    let (mut re, mut im) = (Compensated::default(), Compensated::default());
    let mut rounding = 0.0;
    let (err_bound, terms_used) = sum_series(params, z.norm(), |k, c, rel| {
        let t = Complex64::from_polar(c, k as f64 * theta);
        re.add(t.re);
        im.add(t.im);
        rounding += (rel + (8.0 + k as f64) * f64::EPSILON) * c.abs();
    })?;
    let value = Complex64::new(re.value(), im.value());
    check_rounding(params, rounding, value.norm())?;
    Ok(MLResult {
        value,
        err_bound,
        rounding,
        terms_used,
    })
}

/// `E_{alpha,beta}(M) = sum_k M^k / Gamma(alpha k + beta)` for a square matrix.
///
/// Direct series without scaling or eigendecomposition; `err_bound` refers
/// to the Frobenius norm of the remainder.
pub fn ml_eval_matrix(params: &MLParams, m: &DMatrix<f64>) -> Result<MLResult<DMatrix<f64>>> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("matrix entries must be finite".into()));
    }
    let d = m.nrows();
    let norm = m.norm();
    let unit = if norm > 0.0 { m / norm } else { m.clone() };
    let mut power = DMatrix::<f64>::identity(d, d);
    let mut acc = vec![Compensated::default(); d * d];
    // entrywise first-order rounding of the accumulated products
    let mut entry_rounding = vec![0.0; d * d];
    let (err_bound, terms_used) = sum_series(params, norm, |k, c, rel| {
        if c != 0.0 {
            let unit_round = rel + (4.0 + 2.0 * (k * d) as f64) * f64::EPSILON;
            for ((a, e), p) in acc.iter_mut().zip(entry_rounding.iter_mut()).zip(power.iter()) {
                a.add(c * p);
                *e += unit_round * (c * p).abs();
            }
        }
        power = &power * &unit;
    })?;
    let rounding = entry_rounding.iter().map(|e| e * e).sum::<f64>().sqrt();
    let value = DMatrix::from_iterator(d, d, acc.into_iter().map(Compensated::value));
    check_rounding(params, rounding, value.norm())?;
    Ok(MLResult {
        value,
        err_bound,
        rounding,
        terms_used,
    })
}

/// One-parameter function `E_alpha(z) = E_{alpha,1}(z)`.
pub fn ml_eval_one(alpha: f64, z: f64, tol: f64) -> Result<MLResult<f64>> {
    ml_eval(&MLParams::new(alpha, 1.0).with_tol(tol), z)
}
