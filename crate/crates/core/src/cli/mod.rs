//! `curlfree` command line: check, solve, verify, grid and conditions.

mod problem;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::report::{Candidate, CheckReport};
use crate::riemann_poincare::{self as rp, RiemannProblem};
use crate::saint_venant::{self as sv, SvProblem};
use crate::subriemann::{self as sr, first_order_candidates, second_order_candidates};

pub use problem::{Constants, Entry, Mode, Problem, ProblemFile, Settings, SubRiemannSetup, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input; exit code 2.
    #[error("{0}")]
    Invalid(String),
    /// A computation failed on valid input; exit code 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "curlfree", version, about = "Solvability checks and potential reconstruction for gradient systems")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Evaluate samples and grid points on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathKind {
    Straight,
    Constructed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the compatibility conditions for the problem's mode.
    Check { file: PathBuf },
    /// Evaluate the reconstructed potential (or field) at a point.
    Solve {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c0: Option<f64>,
        /// Defaults to straight, or constructed in subriemannian mode.
        #[arg(long, value_enum)]
        path: Option<PathKind>,
        /// Solve even if the check fails.
        #[arg(long)]
        force: bool,
    },
    /// Finite-difference verification of the reconstruction at sample points.
    Verify {
        file: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate on a k^m lattice over the box and write CSV.
    Grid {
        file: PathBuf,
        #[arg(long = "box-subdivide")]
        box_subdivide: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// List the sub-Riemannian compatibility conditions for n or for a file.
    Conditions {
        #[arg(conflicts_with = "n", required_unless_present = "n")]
        file: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// Render residuals as LaTeX.
        #[arg(long)]
        latex: bool,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut out = std::io::stdout().lock();
    match run(&cli, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Run a parsed command; `Ok(false)` means a check or verification failed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    if cli.sequential {
        exec::set_mode(Execution::Sequential);
    }
    match &cli.command {
        Command::Check { file } => {
            let (problem, settings) = load(file)?;
            let reports = check(&problem, &settings)?;
            emit_reports(cli.json, &reports, out)
        }
        Command::Solve { file, at, c0, path, force } => {
            let (problem, settings) = load(file)?;
            if !*force && !precheck(&problem, &settings)? {
                return Ok(false);
            }
            validate_point(&problem, at)?;
            let value = solve(&problem, &settings, at, *c0, *path)?;
            write_solution(cli.json, at, &value, out)?;
            Ok(true)
        }
        Command::Verify { file, samples, seed } => {
            let (problem, settings) = load(file)?;
            if !precheck(&problem, &settings)? {
                return Ok(false);
            }
            let rep = verify(&problem, &settings, samples.unwrap_or(settings.samples), seed.unwrap_or(settings.seed));
            emit_reports(cli.json, &[rep], out)
        }
        Command::Grid { file, box_subdivide, out: path, force } => {
            let (problem, settings) = load(file)?;
            if !*force && !precheck(&problem, &settings)? {
                return Ok(false);
            }
            let rows = grid(&problem, &settings, *box_subdivide)?;
            write_grid(&problem, &rows, path)?;
            if cli.json {
                line(out, &json!({ "rows": rows.len(), "out": path.display().to_string() }).to_string())?;
            } else {
                line(out, &format!("wrote {} rows to {}", rows.len(), path.display()))?;
            }
            Ok(true)
        }
        Command::Conditions { file, n, latex } => {
            conditions(file.as_deref(), *n, *latex, cli.json, out)?;
            Ok(true)
        }
    }
}

fn line(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    writeln!(out, "{s}").map_err(|e| CliError::Failed(e.to_string()))
}

pub fn load(path: &Path) -> Result<(Problem, Settings), CliError> {
    ProblemFile::read(path)?.build()
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

pub fn check(problem: &Problem, settings: &Settings) -> Result<Vec<CheckReport>, CliError> {
    let opts = settings.check_options();
    match problem {
        Problem::Riemann(p) => Ok(vec![rp::curl_check(p, &opts).map_err(failed)?]),
        Problem::SubRiemann(s) => Ok(vec![
            sr::compat_first(&s.structure, &s.field, &s.domain, &opts).map_err(failed)?,
            sr::compat_second(&s.structure, &s.field, &s.domain, &opts).map_err(failed)?,
        ]),
        Problem::SaintVenant(p) => Ok(vec![sv::sv_check(p, &opts).map_err(failed)?]),
    }
}

/// Run the checks; on failure print the reports to stderr.
fn precheck(problem: &Problem, settings: &Settings) -> Result<bool, CliError> {
    let reports = check(problem, settings)?;
    if reports.iter().all(|r| r.passed) {
        return Ok(true);
    }
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("{r}");
    }
    eprintln!("check failed; rerun with --force to solve anyway");
    Ok(false)
}

fn emit_reports(json: bool, reports: &[CheckReport], out: &mut dyn Write) -> Result<bool, CliError> {
    let passed = reports.iter().all(|r| r.passed);
    if json {
        let doc = json!({ "passed": passed, "reports": reports });
        line(out, &serde_json::to_string_pretty(&doc).map_err(failed)?)?;
    } else {
        for r in reports {
            line(out, &r.to_string())?;
        }
        line(out, &format!("overall: {}", if passed { "PASS" } else { "FAIL" }))?;
    }
    Ok(passed)
}

fn validate_point(problem: &Problem, x: &[f64]) -> Result<(), CliError> {
    let m = problem.ambient_dim();
    if x.len() != m {
        return Err(CliError::Invalid(format!("--at: expected {m} coordinates, got {}", x.len())));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Invalid(format!("--at: coordinate {} is not finite", i + 1)));
    }
    problem.domain().check_contains(x).map_err(|e| CliError::Invalid(format!("--at: {e}")))
}

/// Value at a point: u for the gradient modes, (p, u, V) for Saint-Venant.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Potential { u: f64, error: f64 },
    Field(sv::Reconstruction),
}

fn solve_riemann(p: &RiemannProblem, x: &[f64], c0: f64, tol: f64) -> Result<Value, CliError> {
    let s = rp::cv_solve(p, x, None, tol).map_err(failed)?;
    Ok(Value::Potential { u: s.value - p.c0() + c0, error: s.error })
}

fn solve_sub(s: &SubRiemannSetup, x: &[f64], c0: f64, tol: &Tolerances) -> Result<Value, CliError> {
    let curve = sr::build_horizontal_curve(&s.structure, &s.base, x, tol.ode).map_err(failed)?;
    let sol = sr::cv_horizontal_solve(&s.structure, &s.field, &s.base, x, Some(&curve), c0, tol.quad).map_err(failed)?;
    Ok(Value::Potential { u: sol.value, error: sol.error })
}

fn solve_sv(p: &SvProblem, x: &[f64], tol: f64) -> Result<Value, CliError> {
    sv::reconstruct(p, x, tol).map(Value::Field).map_err(failed)
}

pub fn solve(problem: &Problem, settings: &Settings, x: &[f64], c0: Option<f64>, path: Option<PathKind>) -> Result<Value, CliError> {
    let tol = &settings.tol;
    match problem {
        // the straight segment from the base point is the constructed path here
        Problem::Riemann(p) => solve_riemann(p, x, c0.unwrap_or(p.c0()), tol.quad),
        Problem::SubRiemann(s) => {
            if path == Some(PathKind::Straight) {
                return Err(CliError::Invalid("--path straight: straight segments are not horizontal in general; use constructed".into()));
            }
            solve_sub(s, x, c0.unwrap_or(s.c0), tol)
        }
        Problem::SaintVenant(p) => {
            if c0.is_some() {
                return Err(CliError::Invalid("--c0: saint_venant mode takes constants.c0_i and constants.c0_ij".into()));
            }
            solve_sv(p, x, tol.quad)
        }
    }
}

fn write_solution(json: bool, x: &[f64], value: &Value, out: &mut dyn Write) -> Result<(), CliError> {
    match value {
        Value::Potential { u, error } => {
            if json {
                line(out, &json!({ "x": x, "u": u, "error": error }).to_string())
            } else {
                line(out, &format!("{u:.12}"))?;
                line(out, &format!("error estimate {error:.1e}"))
            }
        }
        Value::Field(r) => {
            if json {
                let p: Vec<Vec<f64>> = r.p.row_iter().map(|row| row.iter().copied().collect()).collect();
                line(out, &json!({ "x": x, "V": r.v, "u": r.u, "p": p }).to_string())
            } else {
                let v: Vec<String> = r.v.iter().map(|v| format!("{v:.12}")).collect();
                line(out, &v.join(" "))
            }
        }
    }
}

pub fn verify(problem: &Problem, settings: &Settings, samples: usize, seed: u64) -> CheckReport {
    let tol = settings.tol;
    match problem {
        Problem::Riemann(p) => {
            let u = |x: &[f64]| rp::cv_solve(p, x, None, tol.quad).map(|s| s.value);
            rp::verify_gradient(p, &u, samples, seed)
        }
        Problem::SubRiemann(s) => {
            let u = |x: &[f64]| match solve_sub(s, x, s.c0, &tol) {
                Ok(Value::Potential { u, .. }) => Ok(u),
                Ok(Value::Field(_)) => unreachable!(),
                Err(e) => Err(e),
            };
            sr::verify_horizontal_gradient(&s.structure, &s.field, &u, &s.domain, samples, seed)
        }
        Problem::SaintVenant(p) => {
            let v = |x: &[f64]| sv::reconstruct(p, x, tol.quad).map(|r| r.v);
            sv::verify_symmetric_gradient(p, &v, samples, seed)
        }
    }
}

/// Inclusive k-point lattice per axis, first coordinate slowest; k = 1
/// gives the base point alone.
pub fn lattice(problem: &Problem, k: usize) -> Vec<Vec<f64>> {
    if k == 1 {
        return vec![problem.base().to_vec()];
    }
    let d = problem.domain();
    let m = d.dim();
    let axis = |a: usize, i: usize| d.lo()[a] + (d.hi()[a] - d.lo()[a]) * i as f64 / (k - 1) as f64;
    let total = k.pow(m as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; m];
            for a in (0..m).rev() {
                x[a] = axis(a, idx % k);
                idx /= k;
            }
            x
        })
        .collect()
}

/// Lattice point and its value columns.
pub type GridRow = (Vec<f64>, Vec<f64>);

pub fn grid(problem: &Problem, settings: &Settings, k: usize) -> Result<Vec<GridRow>, CliError> {
    if k == 0 {
        return Err(CliError::Invalid("--box-subdivide must be at least 1".into()));
    }
    let m = problem.ambient_dim();
    if (k as f64).powi(m as i32) > 1e7 {
        return Err(CliError::Invalid(format!("--box-subdivide {k}: {k}^{m} points is too many")));
    }
    let points = lattice(problem, k);
    let values = exec::map(&points, |x| solve(problem, settings, x, None, None));
    points
        .into_iter()
        .zip(values)
        .map(|(x, v)| match v? {
            Value::Potential { u, .. } => Ok((x, vec![u])),
            Value::Field(r) => Ok((x, r.v)),
        })
        .collect()
}

fn write_grid(problem: &Problem, rows: &[GridRow], path: &Path) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Invalid(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let m = problem.ambient_dim();
    let mut header: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    match problem {
        Problem::SaintVenant(_) => header.extend((1..=m).map(|i| format!("V{i}"))),
        _ => header.push("u".into()),
    }
    w.write_record(&header).map_err(io)?;
    for (x, v) in rows {
        w.write_record(x.iter().chain(v).map(|c| c.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn conditions(file: Option<&Path>, n: Option<usize>, latex: bool, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let mut listed = Vec::new();
    let n = match (file, n) {
        (Some(path), _) => {
            let (problem, _) = load(path)?;
            let Problem::SubRiemann(s) = problem else {
                return Err(CliError::Invalid(format!("{}: conditions needs a subriemannian file", path.display())));
            };
            let render = |c: Candidate| match c {
                Candidate::Check(c) => {
                    let r = if latex { c.residual.to_latex() } else { c.residual.to_string() };
                    (c.label, c.indices, Some(r))
                }
                Candidate::Skip { label, indices } => (label, indices, None),
            };
            listed.extend(first_order_candidates(&s.structure, &s.field).into_iter().map(render));
            listed.extend(second_order_candidates(&s.structure, &s.field).into_iter().map(render));
            s.structure.n()
        }
        (None, Some(n)) => {
            if n < 2 {
                return Err(CliError::Invalid("--n must be at least 2".into()));
            }
            let generic = |s: String| if latex { Some(s) } else { None };
            for ((i, j), (k, l)) in sr::first_order_slots(n) {
                let r = generic(format!("c_{{{k}{l}}} D_{{{i}{j}}} - c_{{{i}{j}}} D_{{{k}{l}}}"));
                listed.push(("first-order".to_string(), vec![i, j, k, l], r));
            }
            for (k, (i, j)) in sr::second_order_slots(n) {
                let r = generic(format!("X_{{{k}}} D_{{{i}{j}}} - c_{{{i}{j}}} \\partial_{{{}}} \\tilde a_{{{k}}}", n + 1));
                listed.push(("second-order".to_string(), vec![k, i, j], r));
            }
            n
        }
        (None, None) => return Err(CliError::Invalid("give a FILE or --n".into())),
    };
    let counts = sr::condition_counts(n as u64);
    if json {
        let items: Vec<_> =
            listed.iter().map(|(label, idx, r)| json!({ "kind": label, "indices": idx, "residual": r })).collect();
        let doc = json!({ "n": n, "first": counts.first, "second": counts.second, "total": counts.total, "conditions": items });
        return line(out, &serde_json::to_string_pretty(&doc).map_err(failed)?);
    }
    line(out, &format!("n = {n}: {} first-order, {} second-order, {} total", counts.first, counts.second, counts.total))?;
    for (label, idx, r) in &listed {
        let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        let tail = match r {
            Some(r) => r.clone(),
            None if file.is_some() => "skipped".into(),
            None => String::new(),
        };
        line(out, format!("  {label:<13} ({})  {tail}", idx.join(",")).trim_end())?;
    }
    Ok(())
}
