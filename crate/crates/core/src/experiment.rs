//! Reproducible experiment runs and their on-disk results.
//!
//! A run directory holds:
//! - `summary.json`: configuration and final quantities ([`RunSummary`]),
//! - `trace.csv`: one [`DiagnosticsReport`] per accepted pair, preceded by a
//!   `#schema=eed-trace-v1` line,
//! - `pairs.csv`: accepted pairs in acceptance order,
//! - `eigvecs.mtx`: the eigenvectors, same order, Matrix Market array.
//!
//! An experiment directory holds `experiment.json` and one run directory
//! per configuration.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deflation::MuStrategy;
use crate::diagnostics::{DiagnosticsReport, DiagnosticsTracker};
use crate::driver::{is_stray, run_eed, EedRunResult, SolverConfig, TerminatedBy, TraceMode};
use crate::error::{EedError, Result};
use crate::lanczos::ConvergenceCheck;
use crate::mtx::{parse_dense_columns, read_matrix_market, write_dense_columns};
use crate::operator::{CsrMatrix, NormMethod, SymmetricOperator};
use crate::{generators, oracle};

pub const TRACE_SCHEMA: &str = "eed-trace-v1";
pub const SUMMARY_SCHEMA: &str = "eed-summary-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Table1,
    Table2,
    Example2Flipped,
    Laplacian,
    Custom,
}

impl FromStr for ExperimentName {
    type Err = EedError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => ExperimentName::Table1,
            "table2" => ExperimentName::Table2,
            "example2-flipped" => ExperimentName::Example2Flipped,
            "laplacian" => ExperimentName::Laplacian,
            "custom" => ExperimentName::Custom,
            other => {
                return Err(EedError::InvalidConfig(format!(
                    "unknown experiment '{other}'"
                )))
            }
        })
    }
}

/// Where the matrix of a run comes from: `gen:NAME[:ARG]` or a Matrix
/// Market path (optionally prefixed `file:`).
pub fn load_matrix(source: &str) -> Result<CsrMatrix> {
    match source.strip_prefix("gen:") {
        Some(spec) => generators::from_spec(spec),
        None => read_matrix_market(Path::new(source.strip_prefix("file:").unwrap_or(source))),
    }
}

/// One solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub label: String,
    pub matrix: String,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub m: usize,
    pub m0: usize,
    pub mu: MuStrategy,
    pub seed: u64,
    pub trace: TraceMode,
    pub convergence_check: ConvergenceCheck,
    pub validate_inertia: bool,
}

impl RunSpec {
    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.lo, self.hi, self.tol, self.m);
        cfg.lanczos.warm_start_cap = self.m0;
        cfg.lanczos.seed = self.seed;
        cfg.lanczos.convergence_check = self.convergence_check;
        cfg.mu = self.mu;
        cfg.trace = self.trace;
        cfg
    }

    fn synthetic(
        label: String,
        gen: &str,
        lo: f64,
        hi: f64,
        tol: f64,
        mu: MuStrategy,
        seed: u64,
    ) -> Self {
        RunSpec {
            label,
            matrix: format!("gen:{gen}"),
            lo,
            hi,
            tol,
            m: 40,
            m0: 20,
            mu,
            seed,
            trace: TraceMode::PerStep,
            convergence_check: ConvergenceCheck::PerIteration,
            validate_inertia: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub tols: Vec<f64>,
    pub mu_override: Option<f64>,
    pub seed: u64,
    pub output: PathBuf,
    /// Required for [`ExperimentName::Custom`].
    pub custom: Option<RunSpec>,
}

impl ExperimentSpec {
    /// The published configuration with its default tolerances.
    pub fn preset(name: ExperimentName, output: impl Into<PathBuf>) -> Self {
        let tols = match name {
            ExperimentName::Table1 | ExperimentName::Table2 => vec![1e-6, 1e-8, 1e-10],
            _ => vec![1e-8],
        };
        ExperimentSpec {
            name,
            tols,
            mu_override: None,
            seed: 0,
            output: output.into(),
            custom: None,
        }
    }

    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let fixed_or = |default: Option<f64>| match self.mu_override.or(default) {
            Some(mu) => MuStrategy::Fixed(mu),
            None => MuStrategy::Recommended,
        };
        let mut runs = Vec::new();
        for &tol in &self.tols {
            match self.name {
                ExperimentName::Table1 => runs.push(RunSpec::synthetic(
                    format!("tol{tol:e}"),
                    "example51:500",
                    0.0,
                    1e-4,
                    tol,
                    fixed_or(None),
                    self.seed,
                )),
                ExperimentName::Table2 => runs.push(RunSpec::synthetic(
                    format!("tol{tol:e}"),
                    "example51:500",
                    0.0,
                    1e-4,
                    tol,
                    fixed_or(Some(2e-4)),
                    self.seed,
                )),
                ExperimentName::Example2Flipped => {
                    let mu = fixed_or(Some(-0.5));
                    let tag = match mu {
                        MuStrategy::Fixed(v) => format!("mu{v}"),
                        MuStrategy::Recommended => "mu-auto".into(),
                    };
                    for (label, mu) in [(tag, mu), ("mu-auto".into(), MuStrategy::Recommended)] {
                        runs.push(RunSpec::synthetic(
                            format!("{label}-tol{tol:e}"),
                            "example52:200",
                            -1.0,
                            -0.5001,
                            tol,
                            mu,
                            self.seed,
                        ));
                    }
                }
                ExperimentName::Laplacian => runs.push(RunSpec {
                    m: 150,
                    m0: 75,
                    trace: TraceMode::Final,
                    convergence_check: ConvergenceCheck::PerRestart,
                    ..RunSpec::synthetic(
                        format!("tol{tol:e}"),
                        "laplacian:200",
                        0.0,
                        0.07,
                        tol,
                        fixed_or(None),
                        self.seed,
                    )
                }),
                ExperimentName::Custom => {
                    let base = self.custom.clone().ok_or_else(|| {
                        EedError::InvalidConfig("custom experiment needs a run spec".into())
                    })?;
                    runs.push(RunSpec {
                        label: format!("{}-tol{tol:e}", base.label),
                        tol,
                        mu: self.mu_override.map_or(base.mu, MuStrategy::Fixed),
                        ..base
                    });
                }
            }
        }
        Ok(runs)
    }
}

/// Final quantities of a run, mirroring the published table columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub spec: RunSpec,
    pub n: usize,
    /// `None` when the run failed before estimating the norm.
    pub anorm: Option<f64>,
    pub anorm_method: Option<NormMethod>,
    pub mu: Option<f64>,
    pub count: usize,
    pub strays: usize,
    pub eed_steps: usize,
    pub terminated_by: Option<TerminatedBy>,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
    pub gamma_g: Option<f64>,
    pub tau_g: Option<f64>,
    pub gamma_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub omega: Option<f64>,
    pub omega_bound: Option<f64>,
    pub res_frob: Option<f64>,
    pub res_frob_over_anorm: Option<f64>,
    pub delta_bound: Option<f64>,
    pub sun_estimate: Option<f64>,
    pub e_frob: Option<f64>,
    pub max_governing_residual: Option<f64>,
    pub max_cosine_residual: Option<f64>,
    pub inertia_count: Option<usize>,
    pub bound_violations: Vec<String>,
}

impl RunSummary {
    fn failed(spec: &RunSpec, n: usize, err: &EedError) -> Self {
        RunSummary {
            schema: SUMMARY_SCHEMA.into(),
            spec: spec.clone(),
            n,
            anorm: None,
            anorm_method: None,
            mu: None,
            count: 0,
            strays: 0,
            eed_steps: 0,
            terminated_by: None,
            failure: Some(err.to_string()),
            warnings: Vec::new(),
            gamma_g: None,
            tau_g: None,
            gamma_min: None,
            tau_max: None,
            omega: None,
            omega_bound: None,
            res_frob: None,
            res_frob_over_anorm: None,
            delta_bound: None,
            sun_estimate: None,
            e_frob: None,
            max_governing_residual: None,
            max_cosine_residual: None,
            inertia_count: None,
            bound_violations: Vec::new(),
        }
    }

    fn from_result(spec: &RunSpec, res: &EedRunResult<'_>, inertia_count: Option<usize>) -> Self {
        let n = res.state.dim();
        let anorm = res.anorm();
        let last = res.final_report();
        RunSummary {
            schema: SUMMARY_SCHEMA.into(),
            spec: spec.clone(),
            n,
            anorm: Some(anorm),
            anorm_method: Some(res.state.anorm().method),
            mu: res.state.mu(),
            count: res.pairs.len(),
            strays: res.strays.len(),
            eed_steps: res.eed_steps,
            terminated_by: Some(res.terminated_by),
            failure: res.failure.clone(),
            warnings: res.warnings.clone(),
            gamma_g: res.gamma_g,
            tau_g: res.tau_g,
            gamma_min: res.trace.iter().filter_map(|r| r.gamma).reduce(f64::min),
            tau_max: res.trace.iter().map(|r| r.tau).reduce(f64::max),
            omega: last.map(|r| r.omega),
            omega_bound: last.and_then(|r| r.omega_bound),
            res_frob: last.map(|r| r.res_frob),
            res_frob_over_anorm: last.map(|r| r.res_frob / anorm),
            delta_bound: last.and_then(|r| r.delta_bound),
            sun_estimate: last.and_then(|r| r.sun_estimate),
            e_frob: last.map(|r| r.e_frob),
            max_governing_residual: res.max_governing_residual(),
            max_cosine_residual: res.max_cosine_residual(),
            inertia_count,
            bound_violations: res
                .trace
                .iter()
                .flat_map(|r| r.bound_violations(n, anorm))
                .collect(),
        }
    }
}

/// One row of `pairs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub index: usize,
    pub lambda: f64,
    pub shift: f64,
    pub residual_norm: f64,
    pub in_interval: bool,
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[DiagnosticsReport]) -> Result<()> {
    writeln!(w, "#schema={TRACE_SCHEMA}")?;
    let mut cw = csv::Writer::from_writer(w);
    if trace.is_empty() {
        cw.write_record(TRACE_COLUMNS)?;
    }
    for r in trace {
        cw.serialize(r)?;
    }
    cw.flush()?;
    Ok(())
}

const TRACE_COLUMNS: [&str; 19] = [
    "step",
    "lambda",
    "shift",
    "gamma",
    "tau",
    "c",
    "omega",
    "omega_bound",
    "res_frob",
    "res_bound",
    "e_frob",
    "delta_bound",
    "sun_estimate",
    "omega_bound_explicit",
    "delta_bound_explicit",
    "assumption_ok",
    "stability_ok",
    "governing_residual",
    "cosine_residual",
];

pub fn read_trace_csv(path: &Path) -> Result<Vec<DiagnosticsReport>> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or("");
    if first != format!("#schema={TRACE_SCHEMA}") {
        return Err(EedError::parse(
            1,
            format!("expected #schema={TRACE_SCHEMA}"),
        ));
    }
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    rd.deserialize()
        .map(|r| r.map_err(EedError::from))
        .collect()
}

pub fn read_pairs_csv(path: &Path) -> Result<Vec<PairRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize()
        .map(|r| r.map_err(EedError::from))
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Write the result files of a finished run into `dir`.
pub fn write_run(
    dir: &Path,
    spec: &RunSpec,
    res: &EedRunResult<'_>,
    inertia_count: Option<usize>,
) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    let summary = RunSummary::from_result(spec, res, inertia_count);
    write_json(&dir.join("summary.json"), &summary)?;
    write_trace_csv(
        BufWriter::new(File::create(dir.join("trace.csv"))?),
        &res.trace,
    )?;
    let mut pw = csv::Writer::from_path(dir.join("pairs.csv"))?;
    let st = &res.state;
    for i in 0..st.len() {
        pw.serialize(PairRow {
            index: i + 1,
            lambda: st.eigvals()[i],
            shift: st.shifts()[i],
            residual_norm: st.residual_norms()[i],
            in_interval: !is_stray(st.eigvals()[i], spec.lo, spec.tol * st.anorm().value)
                && st.eigvals()[i] <= spec.hi,
        })?;
    }
    pw.flush()?;
    write_dense_columns(
        BufWriter::new(File::create(dir.join("eigvecs.mtx"))?),
        st.eigvecs(),
    )?;
    Ok(summary)
}

/// Inertia-based eigenvalue count for desk-scale matrices (banded
/// factorization cost below about 1e10 flops).
fn inertia_count(a: &CsrMatrix, lo: f64, hi: f64) -> Option<usize> {
    let n = a.dim() as f64;
    let b = a.bandwidth() as f64;
    let cost = if a.dim() <= oracle::DENSE_CAP {
        n * n * n / 3.0
    } else {
        n * b * b
    };
    if cost > 1e10 {
        return None;
    }
    oracle::eigencount_in_interval(a, lo, hi).ok()
}

/// Run one configuration and write its directory. Solver failures are
/// recorded in the summary rather than returned.
pub fn run_single(spec: &RunSpec, dir: &Path) -> Result<RunSummary> {
    let a = load_matrix(&spec.matrix)?;
    let count = if spec.validate_inertia {
        inertia_count(&a, spec.lo, spec.hi)
    } else {
        None
    };
    match run_eed(&a, &spec.solver_config()) {
        Ok(res) => {
            let mut summary = write_run(dir, spec, &res, count)?;
            if let Some(c) = count {
                if c != res.pairs.len() {
                    summary.warnings.push(format!(
                        "inertia count {c} differs from computed count {}",
                        res.pairs.len()
                    ));
                    write_json(&dir.join("summary.json"), &summary)?;
                }
            }
            Ok(summary)
        }
        Err(e) => {
            std::fs::create_dir_all(dir)?;
            let summary = RunSummary::failed(spec, a.dim(), &e);
            write_json(&dir.join("summary.json"), &summary)?;
            Ok(summary)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: ExperimentName,
    pub runs: Vec<String>,
    pub summaries: Vec<RunSummary>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    std::fs::create_dir_all(&spec.output)?;
    let mut report = ExperimentReport {
        name: spec.name,
        runs: Vec::new(),
        summaries: Vec::new(),
    };
    for run in spec.runs()? {
        let summary = run_single(&run, &spec.output.join(&run.label))?;
        report.runs.push(run.label.clone());
        report.summaries.push(summary);
    }
    write_json(&spec.output.join("experiment.json"), &report)?;
    Ok(report)
}

/// Outcome of re-checking a results directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub runs: usize,
    /// Recomputed trace values that disagree with the recorded ones.
    pub mismatches: Vec<String>,
    /// Applicable bounds exceeded by the recomputed values.
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty()
    }
}

/// Recompute the diagnostics of a run or experiment directory from its
/// eigenvectors and compare them with the recorded trace.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let exp = dir.join("experiment.json");
    if exp.exists() {
        let report: ExperimentReport = serde_json::from_reader(BufReader::new(File::open(exp)?))?;
        let mut out = VerifyReport::default();
        for label in &report.runs {
            let r = verify_run(&dir.join(label))?;
            out.runs += r.runs;
            out.mismatches
                .extend(r.mismatches.into_iter().map(|m| format!("{label}: {m}")));
            out.violations
                .extend(r.violations.into_iter().map(|m| format!("{label}: {m}")));
        }
        return Ok(out);
    }
    verify_run(dir)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

pub fn verify_run(dir: &Path) -> Result<VerifyReport> {
    let summary: RunSummary =
        serde_json::from_reader(BufReader::new(File::open(dir.join("summary.json"))?))?;
    let mut out = VerifyReport {
        runs: 1,
        ..Default::default()
    };
    let Some(anorm) = summary.anorm.filter(|_| summary.terminated_by.is_some()) else {
        return Ok(out);
    };
    let a = load_matrix(&summary.spec.matrix)?;
    let pairs = read_pairs_csv(&dir.join("pairs.csv"))?;
    let vecs = parse_dense_columns(BufReader::new(File::open(dir.join("eigvecs.mtx"))?))?;
    let recorded = read_trace_csv(&dir.join("trace.csv"))?;
    if vecs.len() != pairs.len() || recorded.len() != pairs.len() {
        return Err(EedError::InvalidConfig(format!(
            "inconsistent run directory: {} pairs, {} vectors, {} trace rows",
            pairs.len(),
            vecs.len(),
            recorded.len()
        )));
    }
    let eigvals: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let shifts: Vec<f64> = pairs.iter().map(|p| p.shift).collect();
    let mut tracker = DiagnosticsTracker::new(anorm, summary.spec.tol);
    for (k, rec) in recorded.iter().enumerate() {
        let r = tracker.observe(
            &a,
            &vecs[..=k],
            &eigvals[..=k],
            &shifts[..=k],
            pairs[k].residual_norm,
        )?;
        let fields = [
            ("omega", close(r.omega, rec.omega)),
            ("res_frob", close(r.res_frob, rec.res_frob)),
            ("e_frob", close(r.e_frob, rec.e_frob)),
            ("tau", close(r.tau, rec.tau)),
            ("gamma", close_opt(r.gamma, rec.gamma)),
            ("omega_bound", close_opt(r.omega_bound, rec.omega_bound)),
            ("delta_bound", close_opt(r.delta_bound, rec.delta_bound)),
        ];
        for (name, ok) in fields {
            if !ok {
                out.mismatches
                    .push(format!("step {}: {name} differs from trace", k + 1));
            }
        }
        out.violations.extend(r.bound_violations(a.dim(), anorm));
    }
    Ok(out)
}
