//! `bellman-transform run <config>` and `bellman-transform verify <config>`.
//!
//! Exit codes: 0 success, 2 unreadable or invalid config, 3 a hypothesis or
//! model condition fails, 4 the solver hit its iteration cap.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{build_model, BuiltModel, ConfigError, ResolveError, RunConfig};
use crate::diagnostics::{run_diagnostics, DiagnosticsError, DiagnosticsReport};
use crate::models::{BuildError, BuildWarning, LowerBoundReport};
use crate::operator::{solve_fixed_point, OperatorError, SolveReport, SolverSettings};
use crate::output;
use crate::program::{
    check_assumption_ws_override, check_ell_bounded_below, unit_kappa, AssumptionError, DynamicProgram, EllCheck,
    GFunction, WeightFunction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONDITION: i32 = 3;
pub const EXIT_MAX_ITER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bellman-transform", version, about = "Solve dynamic programs via the transformed Bellman operator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, check, solve and write results.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Build the model and check the solver's hypotheses only.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Stopping tolerance on successive differences.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap; hitting it exits with code 4
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Seed for the randomized contraction check.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(t) = self.tol {
            config.solver.tol = t;
        }
        if let Some(m) = self.max_iter {
            config.solver.max_iter = m;
        }
        if let Some(s) = self.seed {
            config.solver.seed = s;
        }
        if let Some(o) = &self.out {
            config.output_dir = Some(o.clone());
        }
        config.validate()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Condition(String),
    #[error("{0}")]
    MaxIter(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Condition(_) => EXIT_CONDITION,
            CliError::MaxIter(_) => EXIT_MAX_ITER,
        }
    }
}

impl From<ResolveError> for CliError {
    fn from(e: ResolveError) -> Self {
        match e {
            ResolveError::Config(c) => CliError::Config(c),
            ResolveError::Build(b) => build_error(b),
            ResolveError::Model(m) => CliError::Config(ConfigError::Invalid(m.to_string())),
        }
    }
}

fn build_error(e: BuildError) -> CliError {
    match e {
        BuildError::ConditionUBarViolated(_)
        | BuildError::ConditionUp2Violated(_)
        | BuildError::ConditionOdbbViolated(_) => CliError::Condition(e.to_string()),
        other => CliError::Config(ConfigError::Invalid(other.to_string())),
    }
}

fn operator_error(e: OperatorError) -> CliError {
    match e {
        OperatorError::MaxIterExceeded(_) => CliError::MaxIter(e.to_string()),
        OperatorError::Length { .. } => CliError::Config(ConfigError::Invalid(e.to_string())),
        other => CliError::Condition(other.to_string()),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Run { config, overrides } => run(config, overrides, cli.quiet, &mut stdout).map(|_| EXIT_OK),
        Command::Verify { config, overrides } => verify(config, overrides, cli.quiet, &mut stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(path)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn weight_for(config: &RunConfig, dp: &DynamicProgram) -> Result<Result<WeightFunction, AssumptionError>, CliError> {
    let (kappa, d, alpha) = match &config.weight {
        None => (unit_kappa(dp), None, None),
        Some(w) => {
            if w.kappa.len() != dp.n_states() {
                return Err(CliError::Config(ConfigError::Invalid(format!(
                    "weight.kappa has {} entries for {} states",
                    w.kappa.len(),
                    dp.n_states()
                ))));
            }
            (w.kappa.clone(), w.d, w.alpha)
        }
    };
    Ok(check_assumption_ws_override(dp, &kappa, d, alpha))
}

/// One row of the `verify` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not evaluated because an earlier check failed.
    Skipped,
    NotApplicable,
}

impl CheckStatus {
    fn from_bool(passed: bool) -> Self {
        if passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
            CheckStatus::NotApplicable => "n/a",
        }
    }
}

/// Hypothesis checks shared by `run` and `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionSummary {
    pub lower_bound: Option<LowerBoundReport>,
    pub assumption: Option<AssumptionSummary>,
    pub assumption_error: Option<String>,
    pub ell: Option<EllCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionSummary {
    pub d: f64,
    pub alpha: f64,
    pub alpha_beta: f64,
    pub unit_kappa: bool,
}

impl ConditionSummary {
    pub fn rows(&self) -> Vec<CheckRow> {
        let mut rows = Vec::new();
        rows.push(match &self.lower_bound {
            Some(r) => CheckRow {
                check: "model lower-bound condition".into(),
                status: CheckStatus::from_bool(r.passed),
                detail: format!(
                    "{}; min = {} at exogenous state {} ({})",
                    r.condition, r.min_value, r.witness_state, r.witness_value
                ),
            },
            None => CheckRow {
                check: "model lower-bound condition".into(),
                status: CheckStatus::NotApplicable,
                detail: "explicit programs carry no model condition".into(),
            },
        });
        match (&self.assumption, &self.assumption_error) {
            (Some(a), _) => rows.push(CheckRow {
                check: "weight assumption (alpha*beta < 1)".into(),
                status: CheckStatus::Pass,
                detail: format!("d = {}, alpha = {}, alpha*beta = {}", a.d, a.alpha, a.alpha_beta),
            }),
            (None, Some(e)) => rows.push(CheckRow {
                check: "weight assumption (alpha*beta < 1)".into(),
                status: CheckStatus::Fail,
                detail: e.clone(),
            }),
            (None, None) => rows.push(CheckRow {
                check: "weight assumption (alpha*beta < 1)".into(),
                status: CheckStatus::Skipped,
                detail: "model could not be built".into(),
            }),
        }
        rows.push(match &self.ell {
            Some(e) => CheckRow {
                check: "ell bounded below".into(),
                status: CheckStatus::from_bool(e.bounded_below),
                detail: format!("min ell = {} at (state {}, action {})", e.min_value, e.witness.0, e.witness.1),
            },
            None => CheckRow {
                check: "ell bounded below".into(),
                status: CheckStatus::Skipped,
                detail: "model could not be built".into(),
            },
        });
        rows
    }

    pub fn all_passed(&self) -> bool {
        self.rows()
            .iter()
            .all(|r| matches!(r.status, CheckStatus::Pass | CheckStatus::NotApplicable))
    }
}

fn condition_from_build_error(e: &ResolveError) -> Option<LowerBoundReport> {
    match e {
        ResolveError::Build(b) => b.condition_report().cloned(),
        _ => None,
    }
}

fn evaluate_conditions(
    config: &RunConfig,
) -> Result<(ConditionSummary, Option<(BuiltModel, WeightFunction)>), CliError> {
    let model = match build_model(&config.model) {
        Ok(m) => m,
        Err(e) => {
            return match condition_from_build_error(&e) {
                Some(report) => Ok((
                    ConditionSummary {
                        lower_bound: Some(report),
                        assumption: None,
                        assumption_error: None,
                        ell: None,
                    },
                    None,
                )),
                None => Err(e.into()),
            }
        }
    };
    let dp = model.dp();
    let weight = weight_for(config, dp)?;
    let ell = check_ell_bounded_below(dp);
    let summary = ConditionSummary {
        lower_bound: model.condition().cloned(),
        assumption: weight.as_ref().ok().map(|w| AssumptionSummary {
            d: w.d(),
            alpha: w.alpha(),
            alpha_beta: w.modulus_bound(),
            unit_kappa: w.is_unit(),
        }),
        assumption_error: weight.as_ref().err().map(|e| e.to_string()),
        ell: Some(ell),
    };
    let ready = weight.ok().map(|w| (model, w));
    Ok((summary, ready))
}

fn print_table(out: &mut impl Write, rows: &[CheckRow]) -> std::io::Result<()> {
    let width = rows.iter().map(|r| r.check.len()).max().unwrap_or(0);
    for r in rows {
        writeln!(
            out,
            "{:width$}  {:7}  {}",
            r.check,
            r.status.label(),
            r.detail
        )?;
    }
    Ok(())
}

/// Runs the hypothesis checks and prints a table. Returns 0 iff all pass, 3 otherwise.
pub fn verify(path: &Path, overrides: &Overrides, quiet: bool, out: &mut impl Write) -> Result<i32, CliError> {
    let config = load(path, overrides)?;
    let (summary, _) = evaluate_conditions(&config)?;
    let rows = summary.rows();
    if !quiet || !summary.all_passed() {
        print_table(out, &rows)?;
    }
    Ok(if summary.all_passed() { EXIT_OK } else { EXIT_CONDITION })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    program: ProgramSummary,
    conditions: &'a ConditionSummary,
    warnings: &'a [BuildWarning],
    solve: SolveSummary,
    files: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
struct ProgramSummary {
    kind: &'static str,
    n_states: usize,
    n_pairs: usize,
    n_actions: usize,
    beta: f64,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    converged: bool,
    iterations: usize,
    tol: f64,
    final_residual: Option<f64>,
}

/// Everything a successful `run` produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub report: SolveReport,
    pub diagnostics: Option<DiagnosticsReport>,
}

/// Builds the model, checks hypotheses, solves from `g ≡ 0`, runs the
/// configured diagnostics and writes all artifacts.
pub fn run(path: &Path, overrides: &Overrides, quiet: bool, out: &mut impl Write) -> Result<RunOutcome, CliError> {
    let config = load(path, overrides)?;
    let output_dir = config
        .output_dir
        .clone()
        .ok_or_else(|| ConfigError::Invalid("no output directory: set output_dir or pass --out".into()))?;
    let (summary, ready) = evaluate_conditions(&config)?;
    let Some((model, w)) = ready.filter(|_| summary.all_passed()) else {
        print_table(out, &summary.rows())?;
        return Err(CliError::Condition("model hypotheses not satisfied".into()));
    };
    let dp = model.dp();
    if !quiet {
        writeln!(
            out,
            "{}: {} states, {} state-action pairs, alpha*beta = {}",
            config.model.kind(),
            dp.n_states(),
            dp.n_pairs(),
            w.modulus_bound()
        )?;
        for warning in model.warnings() {
            writeln!(out, "warning: {warning:?}")?;
        }
    }
    let settings = SolverSettings {
        tol: config.solver.tol,
        max_iter: config.solver.max_iter,
        waive_hypotheses: false,
    };
    std::fs::create_dir_all(&output_dir)?;
    let (report, failure) = match solve_fixed_point(dp, &w, &GFunction::zeros(dp), &settings) {
        Ok(r) => (r, None),
        Err(OperatorError::MaxIterExceeded(r)) => {
            let message = OperatorError::MaxIterExceeded(r.clone()).to_string();
            (*r, Some(message))
        }
        Err(e) => return Err(operator_error(e)),
    };
    let manifest = |files: Vec<&'static str>| Manifest {
        tool: "bellman-transform",
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        program: ProgramSummary {
            kind: config.model.kind(),
            n_states: dp.n_states(),
            n_pairs: dp.n_pairs(),
            n_actions: dp.actions().len(),
            beta: dp.beta(),
        },
        conditions: &summary,
        warnings: model.warnings(),
        solve: SolveSummary {
            converged: report.converged,
            iterations: report.iterations,
            tol: report.tol,
            final_residual: report.residuals.last().copied(),
        },
        files,
    };
    output::write_file(&output_dir.join(output::RESIDUALS_FILE), |b| {
        output::write_residuals(b, &report.residuals)
    })?;
    if let Some(message) = failure {
        output::write_json(
            &output_dir.join(output::MANIFEST_FILE),
            &manifest(vec![output::RESIDUALS_FILE, output::MANIFEST_FILE]),
        )?;
        return Err(CliError::MaxIter(message));
    }
    output::write_file(&output_dir.join(output::SOLUTION_FILE), |b| output::write_solution(b, dp, &report))?;
    output::write_file(&output_dir.join(output::POLICY_FILE), |b| output::write_policy(b, dp, &report))?;
    let mut files = vec![output::SOLUTION_FILE, output::POLICY_FILE, output::RESIDUALS_FILE];
    let diagnostics = match &config.diagnostics {
        None => None,
        Some(options) => {
            let d = run_diagnostics(dp, &w, &report, config.solver.seed, options).map_err(|e| match e {
                DiagnosticsError::Operator(o) => operator_error(o),
                other => CliError::Condition(other.to_string()),
            })?;
            output::write_json(&output_dir.join(output::DIAGNOSTICS_FILE), &d)?;
            files.push(output::DIAGNOSTICS_FILE);
            Some(d)
        }
    };
    files.push(output::MANIFEST_FILE);
    output::write_json(&output_dir.join(output::MANIFEST_FILE), &manifest(files))?;
    if !quiet {
        writeln!(
            out,
            "converged in {} iterations (residual {:e})",
            report.iterations,
            report.residuals.last().copied().unwrap_or(0.0)
        )?;
        if let Some(d) = &diagnostics {
            writeln!(
                out,
                "diagnostics: modulus {} (bound {}), oracle agreement {}, rate audit {} -> {}",
                d.modulus_observed,
                d.modulus_bound,
                d.oracle_policy_agreement,
                if d.rate_audit.passed { "pass" } else { "fail" },
                if d.passed { "PASS" } else { "FAIL" }
            )?;
        }
        writeln!(out, "wrote {}", output_dir.display())?;
    }
    Ok(RunOutcome {
        output_dir,
        report,
        diagnostics,
    })
}
