//! `tracemin` command-line front end.
//!
//! Reports are JSON by default; `--text` prints the same leaves as
//! `path = value` lines. Exit codes: 0 success, 1 input error,
//! 2 infeasible or unsupported, 3 verification failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::indefinite::{block_diag, solve, ConstraintKind, ConstraintSpec, Sense};
use crate::oracle::{self, CounterexampleParams};
use crate::pencil::{diagonalizability, finite_eigenvalues};
use crate::report::SolveReport;
use crate::spectral::{default_inertia_tol, inertia, max_abs, trace_objective, CMatrix, HermitianMatrix, C64};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNSUPPORTED: i32 = 2;
pub const EXIT_VERIFY_FAIL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "tracemin", version, about = "Trace minimization under congruence constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct Format {
    /// JSON report (default).
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// `path = value` lines.
    #[arg(long)]
    text: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal value, pairing and optionally an optimizer.
    Solve {
        path: PathBuf,
        /// Include the optimizer in the report.
        #[arg(long)]
        optimizer: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        format: Format,
    },
    /// Shift, finite eigenvalues and diagonalizability of the pencil A - λB.
    Pencil {
        path: PathBuf,
        #[command(flatten)]
        format: Format,
    },
    /// Compare the closed form against the randomized local search.
    Verify {
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        format: Format,
    },
    /// Coupled-weight example with A = diag(1, μ), B = diag(1, -1).
    Counterexample {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        format: Format,
    },
    /// Built-in consistency checks.
    Selftest {
        #[command(flatten)]
        format: Format,
    },
}

#[derive(Deserialize, Debug, Clone, Copy)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Input document for `solve`, `pencil` and `verify`.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    a: Vec<Vec<Entry>>,
    b: Vec<Vec<Entry>>,
    #[serde(default)]
    d: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    d_plus: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    d_minus: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    constraint: Option<ConstraintKind>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    k_plus: Option<usize>,
    #[serde(default)]
    k_minus: Option<usize>,
    #[serde(default)]
    sense: Option<Sense>,
}

/// Validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub d: Option<HermitianMatrix>,
    pub constraint: ConstraintSpec,
    pub sense: Sense,
}

struct Failure {
    exit: i32,
    code: &'static str,
    message: String,
}

impl Failure {
    fn input(code: &'static str, message: impl Into<String>) -> Self {
        Failure { exit: EXIT_INPUT, code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (exit, code) = match &e {
            Error::NotSquare { .. }
            | Error::NotHermitian { .. }
            | Error::NonFinite
            | Error::DimensionMismatch(_)
            | Error::LengthMismatch { .. } => (EXIT_INPUT, "INVALID_INPUT"),
            Error::DomainViolation(_) => (EXIT_INPUT, "DOMAIN_VIOLATION"),
            Error::InfeasibleConstraint(_) | Error::KTooLarge { .. } => (EXIT_UNSUPPORTED, "INFEASIBLE_CONSTRAINT"),
            Error::NotPsdPencil => (EXIT_UNSUPPORTED, "NOT_PSD_PENCIL"),
            Error::UnsupportedSense(_) => (EXIT_UNSUPPORTED, "UNSUPPORTED_SENSE"),
            Error::BlockStructureViolated { .. } => (EXIT_UNSUPPORTED, "BLOCK_STRUCTURE_VIOLATED"),
            Error::Unsupported(_) => (EXIT_UNSUPPORTED, "UNSUPPORTED"),
            Error::NotPositiveDefinite
            | Error::NoConvergence
            | Error::MissingOptimizer
            | Error::BudgetExceeded { .. }
            | Error::DegenerateDraw => (EXIT_UNSUPPORTED, "NUMERICAL_FAILURE"),
        };
        Failure { exit, code, message: e.to_string() }
    }
}

fn to_matrix(name: &str, rows: &[Vec<Entry>]) -> Result<HermitianMatrix, Failure> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Failure::input(
            "INVALID_INPUT",
            format!("{name} must be square: {n} rows but a row of length {}", bad.len()),
        ));
    }
    let m = CMatrix::from_fn(n, n, |i, j| rows[i][j].value());
    HermitianMatrix::new(m).map_err(|e| Failure::input("INVALID_INPUT", format!("{name}: {e}")))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    fn validate(self) -> Result<Problem, Failure> {
        let a = to_matrix("a", &self.a)?;
        let b = to_matrix("b", &self.b)?;
        if a.dim() != b.dim() {
            return Err(Failure::input("INVALID_INPUT", format!("a is {0}x{0} but b is {1}x{1}", a.dim(), b.dim())));
        }
        let d = match (self.d, self.d_plus, self.d_minus) {
            (Some(d), None, None) => Some(to_matrix("d", &d)?),
            (None, p, m) if p.is_some() || m.is_some() => {
                let p = match p {
                    Some(p) => to_matrix("d_plus", &p)?,
                    None => HermitianMatrix::zeros(0),
                };
                let m = match m {
                    Some(m) => to_matrix("d_minus", &m)?,
                    None => HermitianMatrix::zeros(0),
                };
                Some(block_diag(&p, &m))
            }
            (None, None, None) => None,
            _ => return Err(Failure::input("INVALID_INPUT", "give either d or d_plus/d_minus, not both")),
        };
        let kind = self.constraint.unwrap_or(ConstraintKind::PlusIdentity);
        let constraint = match kind {
            ConstraintKind::PlusIdentity | ConstraintKind::MinusIdentity => {
                let k = self.k.or(d.as_ref().map(HermitianMatrix::dim)).ok_or_else(|| {
                    Failure::input("INVALID_INPUT", "k is required when d is absent")
                })?;
                if kind == ConstraintKind::PlusIdentity {
                    ConstraintSpec::plus(k)
                } else {
                    ConstraintSpec::minus(k)
                }
            }
            ConstraintKind::Signature => {
                if self.k_plus.is_none() && self.k_minus.is_none() {
                    return Err(Failure::input("INVALID_INPUT", "signature constraint needs k_plus and k_minus"));
                }
                let (kp, km) = (self.k_plus.unwrap_or(0), self.k_minus.unwrap_or(0));
                ConstraintSpec::signature(kp, km).map_err(|e| Failure::input("INVALID_INPUT", e.to_string()))?
            }
        };
        if let Some(d) = &d {
            if d.dim() != constraint.k() {
                return Err(Failure::input(
                    "INVALID_INPUT",
                    format!("d is {0}x{0} but the constraint has k = {1}", d.dim(), constraint.k()),
                ));
            }
        }
        if constraint.k() > a.dim() {
            return Err(Failure::from(Error::KTooLarge { k: constraint.k(), available: a.dim() }));
        }
        Ok(Problem { a, b, d, constraint, sense: self.sense.unwrap_or(Sense::Min) })
    }
}

pub fn load_problem(path: &Path) -> Result<Problem, String> {
    read_problem(path).map_err(|f| format!("{}: {}", f.code, f.message))
}

fn read_problem(path: &Path) -> Result<Problem, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input("PARSE_ERROR", format!("cannot read {}: {e}", path.display())))?;
    ProblemFile::parse(&text).map_err(|e| Failure::input("PARSE_ERROR", e))?.validate()
}

impl Problem {
    fn weights(&self) -> Result<&HermitianMatrix, Failure> {
        self.d.as_ref().ok_or_else(|| Failure::input("INVALID_INPUT", "this command needs d or d_plus/d_minus"))
    }
}

fn env_seed() -> u64 {
    std::env::var("TRACEMIN_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

fn inertia_json(a: &HermitianMatrix) -> Result<Value, Failure> {
    let i = inertia(a, default_inertia_tol(a))?;
    Ok(serde_json::to_value(i).expect("inertia serializes"))
}

fn solve_report(p: &Problem, report: &SolveReport, with_x: bool, seed: u64) -> Result<Value, Failure> {
    let d = p.weights()?;
    let mut diagnostics = Map::new();
    diagnostics.insert("inertia_b".into(), inertia_json(&p.b)?);
    if let Some(pencil) = &report.pencil {
        diagnostics.insert("lambda0".into(), json!(pencil.lambda0));
        diagnostics.insert("lambda_plus".into(), json!(pencil.lambda_plus));
        diagnostics.insert("lambda_minus".into(), json!(pencil.lambda_minus));
        diagnostics.insert("diagonalizable".into(), json!(pencil.diagonalizable));
        diagnostics.insert("m0".into(), json!(pencil.m0));
    }
    if !report.lambdas.is_empty() {
        diagnostics.insert("lambdas".into(), json!(report.lambdas));
    }
    diagnostics.insert("pairing_sum".into(), json!(report.pairing_sum()));
    if let Some(x) = &report.x_opt {
        let gram = x.adjoint() * p.b.matrix() * x;
        let residual = max_abs(&(gram - p.constraint.matrix()));
        let objective = trace_objective(p.a.matrix(), d.matrix(), x);
        diagnostics.insert("constraint_residual".into(), json!(residual));
        diagnostics.insert("objective_at_optimizer".into(), json!(objective));
        if let Some(v) = report.value {
            diagnostics.insert("objective_gap".into(), json!((objective - v).abs()));
        }
    }
    let mut out = Map::new();
    out.insert("tool_version".into(), json!(TOOL_VERSION));
    out.insert("command".into(), json!("solve"));
    out.insert("route".into(), json!(report.route.as_str()));
    out.insert("finite".into(), json!(report.finite));
    if let Some(v) = report.value {
        out.insert("value".into(), json!(v));
    }
    out.insert("attained".into(), json!(report.attained));
    out.insert("pairing".into(), serde_json::to_value(&report.pairing).expect("pairing serializes"));
    if with_x {
        if let Some(x) = &report.x_opt {
            out.insert("x_opt".into(), matrix_json(x));
        }
    }
    out.insert("diagnostics".into(), Value::Object(diagnostics));
    out.insert("warnings".into(), json!(report.warnings));
    out.insert("seed".into(), json!(seed));
    Ok(Value::Object(out))
}

fn cmd_solve(path: &Path, with_x: bool, seed: u64) -> Result<(Value, i32), Failure> {
    let p = read_problem(path)?;
    let d = p.weights()?;
    let report = solve(&p.a, &p.b, d, &p.constraint, p.sense, true)?;
    Ok((solve_report(&p, &report, with_x, seed)?, EXIT_OK))
}

fn cmd_pencil(path: &Path) -> Result<(Value, i32), Failure> {
    let p = read_problem(path)?;
    let analysis = finite_eigenvalues(&p.a, &p.b)?;
    let (independent, m0_check) = diagonalizability(&p.a, &p.b, &analysis);
    let out = json!({
        "tool_version": TOOL_VERSION,
        "command": "pencil",
        "inertia_b": analysis.inertia_b,
        "lambda0": analysis.lambda0,
        "rank": analysis.rank(),
        "eigenvalues": analysis.eigenvalues(),
        "lambda_plus": analysis.lambda_plus,
        "lambda_minus": analysis.lambda_minus,
        "diagonalizable": analysis.diagonalizable,
        "m0": analysis.m0,
        "diagnostics": {
            "shifted_min_eig": crate::pencil::shifted_min_eig(&p.a, &p.b, analysis.lambda0),
            "eigenspace_check_diagonalizable": independent,
            "eigenspace_check_m0": m0_check,
        },
    });
    Ok((out, EXIT_OK))
}

/// Accepted band for `oracle - analytic`.
pub fn verify_tolerance(value: f64, attained: bool) -> (f64, f64) {
    let scale = 1.0 + value.abs();
    (-1e-8 * scale, if attained { 1e-4 } else { 1e-2 } * scale)
}

fn cmd_verify(path: &Path, restarts: usize, iters: usize, seed: u64) -> Result<(Value, i32), Failure> {
    let p = read_problem(path)?;
    let d = p.weights()?;
    let report = solve(&p.a, &p.b, d, &p.constraint, p.sense, false)?;
    // The oracle minimizes; a maximum is minus the minimum for -A.
    let (a_run, flip) = match p.sense {
        Sense::Min => (p.a.clone(), 1.0),
        Sense::Max => (p.a.neg(), -1.0),
    };
    let found = oracle::local_search(&a_run, &p.b, d, &p.constraint, restarts, iters, seed)?;
    let oracle_best = flip * found.best_value;
    let (gap, tolerance, pass) = match report.value {
        Some(v) => {
            let gap = oracle_best - v;
            let (lo, hi) = verify_tolerance(v, report.attained);
            let gap_signed = flip * gap;
            (Some(gap), Some(json!([lo, hi])), !found.unbounded_flag && gap_signed >= lo && gap_signed <= hi)
        }
        None => (None, None, found.unbounded_flag),
    };
    let mut analytic = Map::new();
    analytic.insert("route".into(), json!(report.route.as_str()));
    analytic.insert("finite".into(), json!(report.finite));
    if let Some(v) = report.value {
        analytic.insert("value".into(), json!(v));
    }
    analytic.insert("attained".into(), json!(report.attained));
    let mut out = Map::new();
    out.insert("tool_version".into(), json!(TOOL_VERSION));
    out.insert("command".into(), json!("verify"));
    out.insert("analytic".into(), Value::Object(analytic));
    out.insert("oracle_best".into(), json!(oracle_best));
    out.insert("oracle_unbounded".into(), json!(found.unbounded_flag));
    if let Some(g) = gap {
        out.insert("gap".into(), json!(g));
    }
    if let Some(t) = tolerance {
        out.insert("tolerance".into(), t);
    }
    out.insert("feasibility_residual".into(), json!(found.feasibility_residual));
    out.insert("iterations".into(), json!(found.iterations));
    out.insert("restarts".into(), json!(restarts));
    out.insert("iters".into(), json!(iters));
    out.insert("seed".into(), json!(seed));
    out.insert("verdict".into(), json!(if pass { "PASS" } else { "FAIL" }));
    Ok((Value::Object(out), if pass { EXIT_OK } else { EXIT_VERIFY_FAIL }))
}

fn cmd_counterexample(mu: f64, delta: f64) -> Result<(Value, i32), Failure> {
    let params = CounterexampleParams::new(mu, delta)?;
    let gap = oracle::counterexample_gap(&params)?;
    let out = json!({
        "tool_version": TOOL_VERSION,
        "command": "counterexample",
        "mu": mu,
        "delta": delta,
        "gamma": params.gamma,
        "nu": params.nu,
        "eta": params.eta,
        "tau_star": gap.tau_star,
        "sigma_star": gap.sigma_star,
        "f_at_stationary": gap.f_at_stationary,
        "sigma_other_root": -gap.sigma_star,
        "f_at_other_root": gap.f_at_other_root,
        "bound": gap.bound,
        "margin": gap.margin,
    });
    Ok((out, EXIT_OK))
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn selftest_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });

    let a = HermitianMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
    let r = solve(&a, &HermitianMatrix::identity(3), &HermitianMatrix::identity(2), &ConstraintSpec::plus(2), Sense::Min, true);
    match r {
        Ok(r) => {
            let v = r.value.unwrap_or(f64::NAN);
            push("ky_fan_min", (v - 3.0).abs() < 1e-12, format!("value {v}"));
        }
        Err(e) => push("ky_fan_min", false, e.to_string()),
    }

    let a = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
    let b = HermitianMatrix::from_diagonal(&[1.0, -1.0]);
    match finite_eigenvalues(&a, &b) {
        Ok(an) => {
            let ok = an.lambda_plus.len() == 1
                && an.lambda_minus.len() == 1
                && (an.lambda_plus[0] - 1.0).abs() < 1e-9
                && (an.lambda_minus[0] + 2.0).abs() < 1e-9
                && an.diagonalizable;
            push("pencil_split", ok, format!("plus {:?}, minus {:?}", an.lambda_plus, an.lambda_minus));
        }
        Err(e) => push("pencil_split", false, e.to_string()),
    }

    let d = HermitianMatrix::from_diagonal(&[-1.0]);
    match solve(&a, &b, &d, &ConstraintSpec::plus(1), Sense::Min, false) {
        Ok(r) => push("unbounded_dichotomy", !r.finite, format!("finite {}", r.finite)),
        Err(e) => push("unbounded_dichotomy", false, e.to_string()),
    }

    let d = HermitianMatrix::from_diagonal(&[1.0]);
    match oracle::local_search(&a, &b, &d, &ConstraintSpec::plus(1), 8, 500, 0) {
        Ok(found) => {
            let ok = (found.best_value - 1.0).abs() < 1e-6;
            push("oracle_agreement", ok, format!("oracle {}", found.best_value));
        }
        Err(e) => push("oracle_agreement", false, e.to_string()),
    }

    match CounterexampleParams::new(2.0, 0.25).and_then(|p| oracle::counterexample_gap(&p)) {
        Ok(g) => push("coupled_weights_gap", g.margin > 0.0, format!("margin {}", g.margin)),
        Err(e) => push("coupled_weights_gap", false, e.to_string()),
    }
    checks
}

fn cmd_selftest() -> Result<(Value, i32), Failure> {
    let checks = selftest_checks();
    let all = checks.iter().all(|c| c.passed);
    let list: Vec<Value> =
        checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect();
    let out = json!({
        "tool_version": TOOL_VERSION,
        "command": "selftest",
        "checks": list,
        "verdict": if all { "PASS" } else { "FAIL" },
    });
    Ok((out, if all { EXIT_OK } else { EXIT_VERIFY_FAIL }))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Text rendering: one `path = value` line per JSON leaf, numbers printed
/// exactly as in the JSON report.
pub fn render_text(v: &Value) -> String {
    let mut leaves = Vec::new();
    flatten("", v, &mut leaves);
    leaves.into_iter().map(|(k, x)| format!("{k} = {x}\n")).collect()
}

fn emit(out: &mut dyn Write, value: &Value, text: bool) {
    let body = if text {
        render_text(value)
    } else {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        s
    };
    let _ = out.write_all(body.as_bytes());
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let (result, format, name) = match cli.command {
        Command::Solve { path, optimizer, seed, format } => {
            (cmd_solve(&path, optimizer, seed.unwrap_or_else(env_seed)), format, "solve")
        }
        Command::Pencil { path, format } => (cmd_pencil(&path), format, "pencil"),
        Command::Verify { path, restarts, iters, seed, format } => {
            (cmd_verify(&path, restarts, iters, seed.unwrap_or_else(env_seed)), format, "verify")
        }
        Command::Counterexample { mu, delta, format } => (cmd_counterexample(mu, delta), format, "counterexample"),
        Command::Selftest { format } => (cmd_selftest(), format, "selftest"),
    };
    match result {
        Ok((value, code)) => {
            emit(out, &value, format.text);
            code
        }
        Err(f) => {
            let value = json!({
                "tool_version": TOOL_VERSION,
                "command": name,
                "error": {"code": f.code, "message": f.message},
            });
            emit(out, &value, format.text);
            let _ = writeln!(err, "error[{}]: {}", f.code, f.message);
            f.exit
        }
    }
}
