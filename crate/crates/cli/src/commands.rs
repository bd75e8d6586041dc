use crate::args::{
    BootstrapArgs, Command, DataArgs, FitArgs, KindArg, MethodArg, ModeArg, SelectArgs, SimulateArgs,
    SolverArgs,
};
use crate::io::{self, IoError, Report};
use envest_core::estimators::{self, EnvelopeKind, EstimatorSettings, RegressionData};
use envest_core::simulate::{self, AlgorithmSummary, ExperimentRecord};
use envest_core::solver::{Algorithm, SolverSettings};
use envest_core::{Diagnostic, Execution};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Compute(#[from] envest_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(IoError::Parse { .. } | IoError::Empty { .. }) => "parse",
            CliError::Io(_) => "io",
            CliError::Compute(_) => "computation",
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Command name followed by the command's own flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config<A> {
    pub command: String,
    #[serde(flatten)]
    pub args: A,
}

fn config<A: Clone>(command: &str, args: &A) -> Config<A> {
    Config { command: command.into(), args: args.clone() }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn solver_settings(args: &SolverArgs, seed: u64) -> CliResult<SolverSettings> {
    let mut s = SolverSettings::default();
    for (name, tol) in [("onedim-tol", args.onedim_tol), ("fg-tol", args.fg_tol)] {
        if tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return usage(format!("--{name} must be a positive number"));
        }
    }
    if let Some(t) = args.onedim_tol {
        s.onedim.gradient_tol = t;
    }
    if let Some(m) = args.onedim_max_iter {
        s.onedim.max_inner_iterations = m;
    }
    if let Some(k) = args.extra_starts {
        s.onedim.num_extra_starts = k;
    }
    if let Some(t) = args.fg_tol {
        s.fg.gradient_tol = t;
    }
    if let Some(m) = args.fg_max_iter {
        s.fg.max_iterations = m;
    }
    s.onedim.seed = seed;
    s.fg.seed = seed;
    s.fg.onedim = s.onedim.clone();
    Ok(s)
}

fn estimator_settings(args: &SolverArgs, seed: u64) -> CliResult<EstimatorSettings> {
    Ok(EstimatorSettings { solver: solver_settings(args, seed)?, execution: Execution::default() })
}

fn load_data(args: &DataArgs) -> CliResult<(RegressionData, EnvelopeKind)> {
    if args.kind == KindArg::Partial && args.p1.is_none() {
        return usage("--p1 is required for the partial kind");
    }
    if args.kind != KindArg::Partial && args.p1.is_some() {
        return usage("--p1 is only used by the partial kind");
    }
    let y = io::read_matrix_csv(&args.y)?;
    let data = if args.kind.needs_x() {
        let Some(x_path) = &args.x else {
            return usage("--x is required for this kind");
        };
        let x = io::read_matrix_csv(x_path)?;
        if x.nrows() != y.nrows() {
            return usage(format!("x has {} rows but y has {}", x.nrows(), y.nrows()));
        }
        RegressionData::new(x, y)?
    } else {
        RegressionData::responses(y)?
    };
    let kind = match args.kind {
        KindArg::Response => EnvelopeKind::Response,
        KindArg::Partial => {
            let p1 = args.p1.unwrap_or(0);
            if p1 == 0 || p1 > data.p() {
                return usage(format!("p1 must be between 1 and p (p = {}), got {p1}", data.p()));
            }
            EnvelopeKind::Partial { p1 }
        }
        KindArg::Predictor => EnvelopeKind::Predictor,
        KindArg::Mean => EnvelopeKind::Mean,
        KindArg::ConstrainedMean => EnvelopeKind::ConstrainedMean,
    };
    Ok((data, kind))
}

fn check_u_positive(u: usize) -> CliResult<()> {
    if u == 0 {
        return usage("u must be between 1 and d, got u = 0");
    }
    Ok(())
}

fn check_u(u: usize, d: usize) -> CliResult<()> {
    if u == 0 || u > d {
        return usage(format!("u must be between 1 and d (d = {d}), got u = {u}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub kind: EnvelopeKind,
    pub algorithm: Algorithm,
    pub u: usize,
    pub objective: f64,
    pub gamma: Vec<Vec<f64>>,
    pub beta_env: Vec<Vec<f64>>,
    pub beta_ols: Vec<Vec<f64>>,
    pub sigma_env: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub objective_values: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: usize,
    pub p: usize,
    pub r: usize,
    pub u: usize,
    pub objective: f64,
}

pub type FitReport = Report<Config<FitArgs>, FitRecord, FitSummary>;

pub fn fit(args: &FitArgs) -> CliResult<FitReport> {
    check_u_positive(args.u)?;
    let (data, kind) = load_data(&args.data)?;
    check_u(args.u, kind.max_dimension(&data))?;
    let settings = estimator_settings(&args.solver, args.seed)?;
    let algorithm = Algorithm::from(args.algo);
    let f = estimators::fit_kind(&data, kind, args.u, algorithm, &settings)?;
    let record = FitRecord {
        kind,
        algorithm,
        u: args.u,
        objective: f.fit.objective,
        gamma: rows(f.fit.basis.matrix()),
        beta_env: rows(&f.beta_env),
        beta_ols: rows(&f.beta_ols),
        sigma_env: rows(f.sigma_env.matrix()),
        alpha: f.alpha_hat.iter().copied().collect(),
        objective_values: f.fit.objective_values.clone(),
        inner_iterations: f.fit.inner_iterations.clone(),
        diagnostics: f.fit.diagnostics.clone(),
        wall_time_seconds: args.include_timing.then_some(f.fit.wall_time_seconds),
    };
    let summary = FitSummary { n: data.n(), p: data.p(), r: data.r(), u: args.u, objective: f.fit.objective };
    Ok(Report::new(config("fit", args), vec![record], summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub replication: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub distance: Option<f64>,
    pub final_objective: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl SimulationRecord {
    fn from_experiment(r: ExperimentRecord, timing: bool) -> Self {
        Self {
            replication: r.replication,
            seed: r.seed,
            algorithm: r.algorithm,
            distance: r.distance,
            final_objective: r.final_objective,
            diagnostics: r.diagnostics,
            error: r.error,
            wall_time_seconds: timing.then_some(r.wall_time_seconds),
        }
    }
}

pub type SimulationReport = Report<Config<SimulateArgs>, SimulationRecord, BTreeMap<String, AlgorithmSummary>>;

pub fn simulate(args: &SimulateArgs) -> CliResult<SimulationReport> {
    if args.u == 0 || args.u >= args.d {
        return usage(format!("u must be between 1 and d - 1 (d = {}), got u = {}", args.d, args.u));
    }
    let mut algos: Vec<Algorithm> = Vec::new();
    for a in &args.algo {
        let a = Algorithm::from(*a);
        if !algos.contains(&a) {
            algos.push(a);
        }
    }
    let settings = solver_settings(&args.solver, args.seed)?;
    let execution = Execution::default();
    let report = match args.mode {
        ModeArg::Population => {
            if args.n.is_some() {
                return usage("--n is only used in sample mode");
            }
            simulate::population_experiment(args.d, args.u, args.reps, &algos, args.seed, &settings, execution)?
        }
        ModeArg::Sample => {
            let Some(n) = args.n else {
                return usage("--n is required in sample mode");
            };
            if n < args.d + 2 {
                return usage(format!("n must be at least d + 2 = {}, got {n}", args.d + 2));
            }
            simulate::sample_experiment(args.d, args.u, n, args.reps, &algos, args.seed, &settings, execution)?
        }
    };
    let mut summary = report.summary;
    if !args.include_timing {
        for s in summary.values_mut() {
            s.wall_time_seconds = None;
        }
    }
    let records = report.records.into_iter().map(|r| SimulationRecord::from_experiment(r, args.include_timing)).collect();
    Ok(Report::new(config("simulate", args), records, summary))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per algorithm: fits, failures, distance and objective statistics,
/// plus wall time when `timing` is set.
pub fn summary_csv(summary: &BTreeMap<String, AlgorithmSummary>, timing: bool) -> String {
    let mut out = String::from(
        "algorithm,fits,failures,mean_distance,se_distance,median_distance,max_distance,mean_objective,se_objective",
    );
    if timing {
        out.push_str(",mean_wall_time_seconds,se_wall_time_seconds");
    }
    out.push('\n');
    for (name, s) in summary {
        let _ = write!(
            out,
            "{name},{},{},{},{},{},{},{},{}",
            s.fits,
            s.failures,
            cell(s.distance.map(|m| m.mean)),
            cell(s.distance.map(|m| m.se)),
            cell(s.median_distance),
            cell(s.max_distance),
            cell(s.final_objective.map(|m| m.mean)),
            cell(s.final_objective.map(|m| m.se)),
        );
        if timing {
            let _ = write!(out, ",{},{}", cell(s.wall_time_seconds.map(|m| m.mean)), cell(s.wall_time_seconds.map(|m| m.se)));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub u: usize,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub method: MethodArg,
    pub u_star: usize,
}

pub type SelectionReport = Report<Config<SelectArgs>, SelectionRecord, SelectionSummary>;

pub fn select_u(args: &SelectArgs) -> CliResult<SelectionReport> {
    let (data, kind) = load_data(&args.data)?;
    let d = kind.max_dimension(&data);
    let u_max = args.u_max.unwrap_or(d);
    if u_max == 0 || u_max > d {
        return usage(format!("u-max must be between 1 and d (d = {d}), got {u_max}"));
    }
    let settings = estimator_settings(&args.solver, args.seed)?;
    let algorithm = Algorithm::from(args.algo);
    let sel = match args.method {
        MethodArg::Bic => estimators::select_dimension_bic(&data, kind, u_max, algorithm, &settings)?,
        MethodArg::Cv => {
            if !kind.supports_prediction() {
                return usage(format!("cross-validation needs a predictive kind, got {}", kind.name()));
            }
            if args.folds < 2 || args.folds > data.n() {
                return usage(format!("folds must be between 2 and n (n = {}), got {}", data.n(), args.folds));
            }
            estimators::select_dimension_cv(&data, kind, u_max, args.folds, algorithm, &settings, args.seed)?
        }
    };
    let records = sel
        .scores
        .iter()
        .enumerate()
        .map(|(i, score)| SelectionRecord {
            u: i + 1,
            score: *score,
            error: sel.failures.iter().find(|(u, _)| *u == i + 1).map(|(_, m)| m.clone()),
        })
        .collect();
    Ok(Report::new(config("select-u", args), records, SelectionSummary { method: args.method, u_star: sel.u_star }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub row: usize,
    pub column: usize,
    pub se_ols: f64,
    pub se_env: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub failures: usize,
}

pub type BootstrapReport = Report<Config<BootstrapArgs>, CoefficientRecord, BootstrapSummary>;

pub fn bootstrap(args: &BootstrapArgs) -> CliResult<BootstrapReport> {
    if !matches!(args.data.kind, KindArg::Response | KindArg::Partial | KindArg::Predictor) {
        return usage("bootstrap needs a regression kind (response, partial or predictor)");
    }
    if args.bootstrap_b < 2 {
        return usage(format!("b must be at least 2, got {}", args.bootstrap_b));
    }
    check_u_positive(args.u)?;
    let (data, kind) = load_data(&args.data)?;
    check_u(args.u, kind.max_dimension(&data))?;
    let settings = estimator_settings(&args.solver, args.seed)?;
    let b = simulate::residual_bootstrap(&data, kind, args.u, args.bootstrap_b, args.algo.into(), &settings, args.seed)?;
    let mut records = Vec::new();
    for i in 0..b.se_ols.nrows() {
        for j in 0..b.se_ols.ncols() {
            let (o, e) = (b.se_ols[(i, j)], b.se_env[(i, j)]);
            records.push(CoefficientRecord { row: i, column: j, se_ols: o, se_env: e, ratio: (e > 0.0).then(|| o / e) });
        }
    }
    Ok(Report::new(config("bootstrap", args), records, BootstrapSummary { replicates: b.replicates, failures: b.failures }))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> CliResult<()> {
    Ok(io::write_report_json(report, out)?)
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => emit(&fit(a)?, a.out.as_deref()),
        Command::Simulate(a) => {
            let report = simulate(a)?;
            if let Some(path) = &a.csv_summary {
                io::write_output(summary_csv(&report.summary, a.include_timing).as_bytes(), Some(path))?;
            }
            emit(&report, a.out.as_deref())
        }
        Command::SelectU(a) => emit(&select_u(a)?, a.out.as_deref()),
        Command::Bootstrap(a) => emit(&bootstrap(a)?, a.out.as_deref()),
    }
}

