//! Problem files (TOML, or the equivalent JSON) and result documents.
//!
//! ```toml
//! [orders]
//! alpha = 0.5
//! beta = 0.5
//!
//! [generator]
//! matrix = [[1.0, 0.0], [0.0, 2.0]]
//!
//! [horizon]
//! t0 = 0.0
//! a = 3.5
//!
//! [initial]
//! xi0 = [1.0, -0.5]
//! ball_radius = 4.0
//!
//! [nonlinearity]
//! kind = "sine"        # zero | linear (matrix) | sine (kappa) | polynomial (coeffs) | tabulated (u, phi)
//! kappa = 0.1
//!
//! [delay]
//! kind = "proportional" # identity | proportional (q) | lag (tau) | tabulated (t, sigma)
//! q = 0.5
//!
//! [nonlocal]
//! anchors = [3.5]
//! coefficients = [0.05] # scalars or square matrices
//!
//! [numerics]
//! grid_n = 512
//! tol = 1e-8
//! max_iter = 200
//! ml_tol = 1e-12
//! seed = 42
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{DelaySpec, NonlinSpec, NonlocalSpec, Numerics, Problem};
use crate::solution_ops::Generator;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub orders: Orders,
    pub generator: GeneratorSection,
    pub horizon: Horizon,
    pub initial: Initial,
    #[serde(default)]
    pub nonlinearity: NonlinSection,
    #[serde(default)]
    pub delay: DelaySection,
    #[serde(default)]
    pub nonlocal: NonlocalSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    #[serde(default)]
    pub t0: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub xi0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinSection {
    #[default]
    Zero,
    Linear { matrix: Vec<Vec<f64>> },
    Sine { kappa: f64 },
    Polynomial { coeffs: Vec<f64> },
    Tabulated { u: Vec<f64>, phi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySection {
    #[default]
    Identity,
    Proportional { q: f64 },
    Lag { tau: f64 },
    Tabulated { t: Vec<f64>, sigma: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalSection {
    #[serde(default)]
    pub anchors: Vec<f64>,
    #[serde(default)]
    pub coefficients: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub ml_tol: f64,
    pub seed: u64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let n = Numerics::default();
        Self {
            grid_n: n.grid_n,
            tol: n.tol,
            max_iter: n.max_iter,
            ml_tol: n.ml_tol,
            seed: n.seed,
        }
    }
}

/// Ball radius used when the file does not give one: `2 max(|xi0|, 1)`.
pub fn default_ball_radius(xi0: &[f64]) -> f64 {
    2.0 * xi0.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0)
}

fn square(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 {
        return Err(Error::Validation {
            field: field.into(),
            message: "matrix is empty".into(),
        });
    }
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::Validation {
            field: field.into(),
            message: format!("row {} has {} entries, expected {d} (matrix must be square)", i + 1, rows[i].len()),
        });
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl ProblemFile {
    /// Converts and validates.
    pub fn into_problem(self) -> Result<Problem> {
        let a = square(&self.generator.matrix, "generator.matrix")?;
        let d = a.nrows();
        let gen = Generator::new(a).map_err(|e| Error::Validation {
            field: "generator.matrix".into(),
            message: e.to_string(),
        })?;
        let nonlin = match self.nonlinearity {
            NonlinSection::Zero => NonlinSpec::Zero,
            NonlinSection::Linear { matrix } => NonlinSpec::Linear(square(&matrix, "nonlinearity.matrix")?),
            NonlinSection::Sine { kappa } => NonlinSpec::Sine { kappa },
            NonlinSection::Polynomial { coeffs } => NonlinSpec::Polynomial { coeffs },
            NonlinSection::Tabulated { u, phi } => NonlinSpec::Tabulated { u, phi },
        };
        let delay = match self.delay {
            DelaySection::Identity => DelaySpec::Identity,
            DelaySection::Proportional { q } => DelaySpec::Proportional { q },
            DelaySection::Lag { tau } => DelaySpec::Lag { tau },
            DelaySection::Tabulated { t, sigma } => DelaySpec::Tabulated { t, sigma },
        };
        let coefficients = self
            .nonlocal
            .coefficients
            .iter()
            .map(|c| match c {
                Coefficient::Scalar(s) => Ok(DMatrix::identity(d, d) * *s),
                Coefficient::Matrix(m) => square(m, "nonlocal.coefficients"),
            })
            .collect::<Result<Vec<_>>>()?;
        let ball_radius = self
            .initial
            .ball_radius
            .unwrap_or_else(|| default_ball_radius(&self.initial.xi0));
        let n = self.numerics;
        let prob = Problem {
            gen,
            alpha: self.orders.alpha,
            beta: self.orders.beta,
            t0: self.horizon.t0,
            a: self.horizon.a,
            xi0: DVector::from_vec(self.initial.xi0),
            nonlin,
            delay,
            nonlocal: NonlocalSpec {
                anchors: self.nonlocal.anchors,
                coefficients,
            },
            ball_radius,
            numerics: Numerics {
                grid_n: n.grid_n,
                tol: n.tol,
                max_iter: n.max_iter,
                ml_tol: n.ml_tol,
                seed: n.seed,
            },
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Canonical file for a problem: every field explicit, matrices written out.
    pub fn from_problem(p: &Problem) -> Self {
        let d = p.dim();
        let coefficients = p
            .nonlocal
            .coefficients
            .iter()
            .map(|c| {
                let s = c[(0, 0)];
                if *c == DMatrix::identity(d, d) * s {
                    Coefficient::Scalar(s)
                } else {
                    Coefficient::Matrix(rows_of(c))
                }
            })
            .collect();
        Self {
            orders: Orders {
                alpha: p.alpha,
                beta: p.beta,
            },
            generator: GeneratorSection { matrix: p.gen.rows() },
            horizon: Horizon { t0: p.t0, a: p.a },
            initial: Initial {
                xi0: p.xi0.iter().copied().collect(),
                ball_radius: Some(p.ball_radius),
            },
            nonlinearity: match &p.nonlin {
                NonlinSpec::Zero => NonlinSection::Zero,
                NonlinSpec::Linear(l) => NonlinSection::Linear { matrix: rows_of(l) },
                NonlinSpec::Sine { kappa } => NonlinSection::Sine { kappa: *kappa },
                NonlinSpec::Polynomial { coeffs } => NonlinSection::Polynomial { coeffs: coeffs.clone() },
                NonlinSpec::Tabulated { u, phi } => NonlinSection::Tabulated {
                    u: u.clone(),
                    phi: phi.clone(),
                },
            },
            delay: match &p.delay {
                DelaySpec::Identity => DelaySection::Identity,
                DelaySpec::Proportional { q } => DelaySection::Proportional { q: *q },
                DelaySpec::Lag { tau } => DelaySection::Lag { tau: *tau },
                DelaySpec::Tabulated { t, sigma } => DelaySection::Tabulated {
                    t: t.clone(),
                    sigma: sigma.clone(),
                },
            },
            nonlocal: NonlocalSection {
                anchors: p.nonlocal.anchors.clone(),
                coefficients,
            },
            numerics: NumericsSection {
                grid_n: p.numerics.grid_n,
                tol: p.numerics.tol,
                max_iter: p.numerics.max_iter,
                ml_tol: p.numerics.ml_tol,
                seed: p.numerics.seed,
            },
        }
    }
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best guess at the offending key: a backquoted name in the message, else
/// the key assigned on the reported line, else the section it opens.
fn field_hint(text: &str, line: Option<usize>, message: &str) -> Option<String> {
    if let Some(start) = message.find('`') {
        if let Some(len) = message[start + 1..].find('`') {
            let name = &message[start + 1..start + 1 + len];
            if !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
                return Some(name.to_string());
            }
        }
    }
    let l = text.lines().nth(line? - 1)?;
    let header = l.trim();
    if header.starts_with('[') && header.ends_with(']') {
        return Some(header.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    }
    let key = l.split('=').next()?.trim().trim_matches('"');
    (l.contains('=') && !key.is_empty()).then(|| key.to_string())
}

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// Parses problem text; JSON when it starts with `{`, TOML otherwise.
pub fn parse_problem_str(text: &str) -> Result<Problem> {
    let file: ProblemFile = if looks_like_json(text) {
        serde_json::from_str(text).map_err(|e| {
            let line = (e.line() > 0).then_some(e.line());
            let message = e.to_string();
            Error::Parse {
                line,
                field: field_hint(text, line, &message),
                message,
            }
        })?
    } else {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            let message = e.message().trim().to_string();
            Error::Parse {
                line,
                field: field_hint(text, line, &message),
                message,
            }
        })?
    };
    file.into_problem()
}

/// Reads and validates a problem file.
pub fn parse_problem(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: None,
        field: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_problem_str(&text)
}

/// Canonical TOML text of a problem.
pub fn emit_problem(p: &Problem) -> String {
    toml::to_string(&ProblemFile::from_problem(p)).expect("problem files always serialise")
}

/// Canonical JSON text of a problem.
pub fn emit_problem_json(p: &Problem) -> String {
    serde_json::to_string_pretty(&ProblemFile::from_problem(p)).expect("problem files always serialise")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory as CSV: `t,weight,xw_1..xw_d,x_1..x_d`. The unweighted columns
/// are empty at `t0` when `gamma < 1`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let d = traj.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "weight".to_string()];
    header.extend((1..=d).map(|k| format!("xw_{k}")));
    header.extend((1..=d).map(|k| format!("x_{k}")));
    w.write_record(&header).expect("in-memory write");
    for (i, &t) in traj.grid.nodes().iter().enumerate() {
        let mut row = vec![num(t), num(traj.node_weight(i))];
        row.extend(traj.weighted_values[i].iter().map(|x| num(*x)));
        match traj.value(i) {
            Ok(v) => row.extend(v.iter().map(|x| num(*x))),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), d)),
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Machine-readable error document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDocument {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub exit_code: i32,
}

/// Exit status for an error: 1 for numerical failures, 2 for input errors.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        1
    } else {
        2
    }
}

impl From<&Error> for ErrorDocument {
    fn from(e: &Error) -> Self {
        let (line, field) = match e {
            Error::Parse { line, field, .. } => (*line, field.clone()),
            Error::Validation { field, .. } => (None, Some(field.clone())),
            _ => (None, None),
        };
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            line,
            field,
            exit_code: exit_code(e),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialise");
    s.push('\n');
    s
}
