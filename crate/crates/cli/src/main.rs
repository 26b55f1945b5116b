use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use hilfer::certifier::{estimate_constants, Budget, Certificate};
use hilfer::fracops::{hilfer_derivative, rl_integral, PsiMap, SampledFn};
use hilfer::grid::Grid;
use hilfer::gronwall::{verify, StrongReport};
use hilfer::io::{parse_problem, to_json, trajectory_csv, ErrorDocument};
use hilfer::mlf::{ml_eval, MLParams};
use hilfer::picard::{solve_mild, IterationDiagnostics};
use hilfer::problem::Problem;
use hilfer::solution_ops::solve_linear;
use hilfer::{Error, Result};

#[derive(Parser)]
#[command(name = "hilfer", version, about = "Solve and certify Hilfer fractional evolution problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mild solution by fixed-point iteration
    Solve(RunArgs),
    /// Constants and conditions for existence and uniqueness
    Certify(CertifyArgs),
    /// Solve, then check increments, the Gronwall bound and the equation defects
    Verify(VerifyArgs),
    /// Linear problem with constant forcing (nonlinearity, delay and nonlocal term ignored)
    Linear(LinearArgs),
    /// Evaluate E_{alpha,beta}(z)
    Mlf(MlfArgs),
    /// Fractional integral or Hilfer derivative of sampled data
    Fracops(FracopsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem file (TOML or JSON)
    #[arg(long)]
    problem: PathBuf,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Random pairs per sampled constant
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Shifts for the increment check (multiples of the grid step)
    #[arg(long, value_delimiter = ',')]
    h_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    c_tilde: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Args)]
struct LinearArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Constant forcing vector (zero when omitted)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    forcing: Option<Vec<f64>>,
}

#[derive(Args)]
struct MlfArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    z: f64,
    #[arg(long, default_value_t = hilfer::mlf::DEFAULT_TOL)]
    tol: f64,
    /// Print the full result (value, error bound, terms) as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FracopsArgs {
    /// CSV with a header and columns t, f_1, ..., f_d
    #[arg(long)]
    input: PathBuf,
    /// Order of the fractional integral
    #[arg(long)]
    mu: Option<f64>,
    /// Order of the Hilfer derivative (instead of --mu)
    #[arg(long)]
    alpha: Option<f64>,
    /// Type of the Hilfer derivative
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// identity | power:<p> | log:<c> | table:<path>
    #[arg(long, default_value = "identity")]
    psi: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            let doc = UsageError {
                kind: "UsageError",
                message: e.kind().to_string(),
                exit_code: 2,
            };
            print!("{}", to_json(&doc));
            return ExitCode::from(2);
        }
    };
    let out = match &cli.command {
        Command::Solve(r) => r.out.clone(),
        Command::Certify(c) => c.run.out.clone(),
        Command::Verify(v) => v.run.out.clone(),
        Command::Linear(l) => l.run.out.clone(),
        Command::Mlf(_) => None,
        Command::Fracops(f) => f.out.clone(),
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Linear(a) => cmd_linear(a),
        Command::Mlf(a) => cmd_mlf(a),
        Command::Fracops(a) => cmd_fracops(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = ErrorDocument::from(&e);
            eprintln!("error: {e}");
            let text = to_json(&doc);
            print!("{text}");
            if let Some(dir) = out {
                let _ = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join("error.json"), &text));
            }
            ExitCode::from(doc.exit_code as u8)
        }
    }
}

#[derive(Serialize)]
struct UsageError {
    kind: &'static str,
    message: String,
    exit_code: i32,
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidParams(format!("cannot write {}: {e}", path.display()))
}

/// Writes every file only after all of them have been computed.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn require_out(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().ok_or_else(|| Error::Validation {
        field: "--out".into(),
        message: "an output directory is required".into(),
    })
}

fn load(args: &RunArgs) -> Result<Problem> {
    let mut p = parse_problem(&args.problem)?;
    if let Some(n) = args.grid_n {
        p.numerics.grid_n = n;
    }
    if let Some(t) = args.tol {
        p.numerics.tol = t;
    }
    if let Some(m) = args.max_iter {
        p.numerics.max_iter = m;
    }
    if let Some(s) = args.seed {
        p.numerics.seed = s;
    }
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    grid_n: usize,
    tol: f64,
    max_iter: usize,
    #[serde(flatten)]
    iteration: &'a IterationDiagnostics,
    /// Largest observed `d_{n+1} / d_n` for `n >= 2`.
    max_ratio_after_two: Option<f64>,
    q: f64,
    q_zeta3: f64,
}

/// `a/64, a/32, a/16` when the grid resolves them, else 1, 2 and 4 steps.
fn default_h_values(grid: &Grid) -> Vec<f64> {
    let a = grid.a();
    if grid.intervals().is_multiple_of(64) {
        vec![a / 64.0, a / 32.0, a / 16.0]
    } else {
        let h = grid.step().unwrap_or(a / grid.intervals() as f64);
        vec![h, 2.0 * h, 4.0 * h]
    }
}

struct Run {
    csv: String,
    diagnostics: String,
    certificate: Certificate,
    report: StrongReport,
}

fn run_full(p: &Problem, h_values: Option<Vec<f64>>, c_tilde: f64, samples: usize) -> Result<Run> {
    let grid = p.default_grid()?;
    let budget = Budget::new(samples, p.numerics.seed);
    let certificate = estimate_constants(p, &budget)?;
    let (traj, diag) = solve_mild(p, &grid, p.numerics.tol, p.numerics.max_iter)?;
    let h_values = h_values.unwrap_or_else(|| default_h_values(&grid));
    let report = verify(&traj, p, &certificate, &h_values, c_tilde, samples, p.numerics.seed)?;
    let diagnostics = to_json(&Diagnostics {
        grid_n: p.numerics.grid_n,
        tol: p.numerics.tol,
        max_iter: p.numerics.max_iter,
        iteration: &diag,
        max_ratio_after_two: diag.ratios.iter().skip(1).copied().reduce(f64::max),
        q: certificate.q,
        q_zeta3: certificate.q_zeta3,
    });
    Ok(Run {
        csv: trajectory_csv(&traj),
        diagnostics,
        certificate,
        report,
    })
}

fn cmd_solve(args: RunArgs) -> Result<()> {
    let dir = require_out(&args.out)?.to_path_buf();
    let p = load(&args)?;
    let run = run_full(&p, None, 1.0, 10_000)?;
    write_all(
        &dir,
        &[
            ("trajectory.csv", run.csv),
            ("diagnostics.json", run.diagnostics),
            ("certificate.json", to_json(&run.certificate)),
            ("strong_report.json", to_json(&run.report)),
        ],
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let p = load(&args.run)?;
    let cert = estimate_constants(&p, &Budget::new(args.samples, p.numerics.seed))?;
    let text = to_json(&cert);
    if let Some(dir) = &args.run.out {
        write_all(dir, &[("certificate.json", text.clone())])?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let dir = require_out(&args.run.out)?.to_path_buf();
    let p = load(&args.run)?;
    let run = run_full(&p, args.h_values, args.c_tilde, args.samples)?;
    let report = to_json(&run.report);
    write_all(
        &dir,
        &[
            ("trajectory.csv", run.csv),
            ("diagnostics.json", run.diagnostics),
            ("certificate.json", to_json(&run.certificate)),
            ("strong_report.json", report.clone()),
        ],
    )?;
    print!("{report}");
    Ok(())
}

fn cmd_linear(args: LinearArgs) -> Result<()> {
    let dir = require_out(&args.run.out)?.to_path_buf();
    let p = load(&args.run)?;
    let grid = p.default_grid()?;
    let f = match args.forcing {
        Some(v) if v.len() != p.dim() => {
            return Err(Error::Validation {
                field: "--forcing".into(),
                message: format!("has {} entries, state dimension is {}", v.len(), p.dim()),
            })
        }
        Some(v) => DVector::from_vec(v),
        None => DVector::zeros(p.dim()),
    };
    let forcing = SampledFn::from_fn(grid.clone(), |_| f.clone())?;
    let traj = solve_linear(&p.gen, p.alpha, p.beta, &p.xi0, &forcing, &grid, p.numerics.ml_tol)?;
    write_all(&dir, &[("trajectory.csv", trajectory_csv(&traj))])?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct MlfDocument {
    alpha: f64,
    beta: f64,
    z: f64,
    value: f64,
    err_bound: f64,
    rounding: f64,
    terms_used: usize,
}

fn cmd_mlf(args: MlfArgs) -> Result<()> {
    let params = MLParams::new(args.alpha, args.beta).with_tol(args.tol);
    let r = ml_eval(&params, args.z)?;
    if args.json {
        print!(
            "{}",
            to_json(&MlfDocument {
                alpha: args.alpha,
                beta: args.beta,
                z: args.z,
                value: r.value,
                err_bound: r.err_bound,
                rounding: r.rounding,
                terms_used: r.terms_used,
            })
        );
    } else {
        println!("{}", r.value);
    }
    Ok(())
}

fn parse_psi(spec: &str) -> Result<PsiMap> {
    let bad = || Error::Validation {
        field: "--psi".into(),
        message: format!("expected identity, power:<p>, log:<c> or table:<path>, got `{spec}`"),
    };
    let number = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match spec.split_once(':') {
        None if spec == "identity" => Ok(PsiMap::Identity),
        Some(("power", p)) => Ok(PsiMap::Power(number(p)?)),
        Some(("log", c)) => Ok(PsiMap::LogShift(number(c)?)),
        Some(("table", path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Parse {
                line: None,
                field: Some("psi".into()),
                message: format!("cannot read {path}: {e}"),
            })?;
            PsiMap::from_table_text(&text)
        }
        _ => Err(bad()),
    }
}

fn read_sampled(path: &Path) -> Result<SampledFn> {
    let parse_err = |line: Option<usize>, message: String| Error::Parse {
        line,
        field: Some("input".into()),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| parse_err(None, e.to_string()))?;
    let mut t = Vec::new();
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        let nums = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(line, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() < 2 {
            return Err(parse_err(line, "need a time column and at least one value column".into()));
        }
        t.push(nums[0]);
        values.push(DVector::from_column_slice(&nums[1..]));
    }
    SampledFn::new(Grid::from_nodes(t)?, values)
}

fn sampled_csv(f: &SampledFn) -> String {
    let d = f.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|k| format!("value_{k}")));
    w.write_record(&header).expect("in-memory write");
    for (i, t) in f.grid.nodes().iter().enumerate() {
        let mut row = vec![format!("{t:.16e}")];
        match f.value(i) {
            Some(v) => row.extend(v.iter().map(|x| format!("{x:.16e}"))),
            None => row.extend(std::iter::repeat_n(String::new(), d)),
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn cmd_fracops(args: FracopsArgs) -> Result<()> {
    let f = read_sampled(&args.input)?;
    let psi = parse_psi(&args.psi)?;
    let out = match (args.mu, args.alpha) {
        (Some(mu), None) => rl_integral(&f, mu, &psi)?,
        (None, Some(alpha)) => hilfer_derivative(&f, alpha, args.beta, &psi)?,
        _ => {
            return Err(Error::Validation {
                field: "--mu".into(),
                message: "give exactly one of --mu (integral) or --alpha (derivative)".into(),
            })
        }
    };
    let text = sampled_csv(&out);
    match &args.out {
        Some(dir) => write_all(dir, &[("fracops.csv", text)])?,
        None => print!("{text}"),
    }
    Ok(())
}
