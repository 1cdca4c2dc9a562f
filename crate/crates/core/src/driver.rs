//! The deflation loop: solve for the lowest pairs of the current deflated
//! operator, accept those inside the interval, shift them away and repeat
//! until the lowest computed eigenvalue leaves the interval.

use serde::{Deserialize, Serialize};

use crate::deflation::{governing_residual, DeflationState, MuStrategy};
use crate::diagnostics::{
    cosine_identity_residual, trace_from_state, DiagnosticsReport, DiagnosticsTracker,
};
use crate::error::{EedError, Result};
use crate::lanczos::{lanczos_lowest, EigenPairResult, LanczosConfig};
use crate::operator::{estimate_two_norm, NormEstimate, SymmetricOperator, NORM_ESTIMATE_ITERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// Diagnostics and identity checks after every accepted pair.
    PerStep,
    /// Diagnostics recomputed once at the end, without the identity checks.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminatedBy {
    SpectrumExit,
    StepCap,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub lanczos: LanczosConfig,
    pub mu: MuStrategy,
    /// Cap on eigensolver calls; defaults to `n + 1`.
    pub max_eed_steps: Option<usize>,
    /// Use this value instead of estimating `||A||_2`.
    pub anorm: Option<f64>,
    pub norm_iters: usize,
    pub trace: TraceMode,
}

impl SolverConfig {
    /// Defaults: `m0 = m/2`, recommended `mu`, per-step trace.
    pub fn new(lo: f64, hi: f64, tol: f64, max_basis: usize) -> Self {
        SolverConfig {
            lo,
            hi,
            tol,
            lanczos: LanczosConfig::new(max_basis, tol),
            mu: MuStrategy::Recommended,
            max_eed_steps: None,
            anorm: None,
            norm_iters: NORM_ESTIMATE_ITERS,
            trace: TraceMode::PerStep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(EedError::InvalidConfig(format!(
                "empty interval [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lanczos.tol != self.tol {
            return Err(EedError::InvalidConfig("lanczos.tol must equal tol".into()));
        }
        if let Some(a) = self.anorm {
            if !(a > 0.0) {
                return Err(EedError::InvalidConfig("anorm must be positive".into()));
            }
        }
        self.lanczos.validate()
    }
}

/// True when a computed eigenvalue lies below `lo` by more than the
/// residual contract `slack = tol * anorm` allows. Eigenvalues sitting
/// exactly on `lo` may round to just below it.
pub fn is_stray(lambda: f64, lo: f64, slack: f64) -> bool {
    lambda < lo - slack
}

/// True when the interval has been exhausted: `lambda > hi`.
pub fn stopping_check(lambda: f64, hi: f64) -> bool {
    lambda > hi
}

/// Progress notifications.
#[derive(Debug)]
pub enum DriverEvent<'e> {
    Solved {
        call: usize,
        converged: usize,
        iterations: usize,
        restarts: usize,
    },
    Accepted {
        index: usize,
        lambda: f64,
        report: Option<&'e DiagnosticsReport>,
    },
}

pub struct EedRunResult<'a> {
    /// Accepted pairs inside the interval, ascending.
    pub pairs: Vec<EigenPairResult>,
    /// Pairs below the interval that had to be deflated to make progress.
    pub strays: Vec<EigenPairResult>,
    pub state: DeflationState<'a>,
    pub trace: Vec<DiagnosticsReport>,
    /// Number of eigensolver calls.
    pub eed_steps: usize,
    pub terminated_by: TerminatedBy,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
    /// `mu - hi`, when `mu` lies above the interval.
    pub gamma_g: Option<f64>,
    /// `(mu - lo) / (mu - hi)`, when `mu` lies above the interval.
    pub tau_g: Option<f64>,
}

impl EedRunResult<'_> {
    pub fn anorm(&self) -> f64 {
        self.state.anorm().value
    }

    pub fn final_report(&self) -> Option<&DiagnosticsReport> {
        self.trace.last()
    }

    pub fn max_governing_residual(&self) -> Option<f64> {
        self.trace
            .iter()
            .filter_map(|r| r.governing_residual)
            .reduce(f64::max)
    }

    pub fn max_cosine_residual(&self) -> Option<f64> {
        self.trace
            .iter()
            .filter_map(|r| r.cosine_residual)
            .reduce(f64::max)
    }
}

pub fn run_eed<'a>(op: &'a dyn SymmetricOperator, cfg: &SolverConfig) -> Result<EedRunResult<'a>> {
    run_eed_observed(op, cfg, &mut |_| {})
}

pub fn run_eed_observed<'a>(
    op: &'a dyn SymmetricOperator,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&DriverEvent<'_>),
) -> Result<EedRunResult<'a>> {
    cfg.validate()?;
    let n = op.dim();
    let anorm = match cfg.anorm {
        Some(v) => NormEstimate::user_supplied(v),
        None => estimate_two_norm(op, cfg.lanczos.seed ^ 0x5eed, cfg.norm_iters)?,
    };
    if anorm.degenerate {
        return Err(EedError::InvalidConfig("operator is zero".into()));
    }
    let mut warnings = Vec::new();
    if cfg.hi - cfg.lo > 0.5 * anorm.value {
        warnings.push(format!(
            "interval width {:e} exceeds anorm/2 = {:e}; shifts may not clear the interval",
            cfg.hi - cfg.lo,
            0.5 * anorm.value
        ));
    }
    let max_steps = cfg.max_eed_steps.unwrap_or(n + 1);
    let mut state = DeflationState::new(op, anorm, cfg.tol, cfg.mu);
    let mut tracker = DiagnosticsTracker::new(anorm.value, cfg.tol);
    let mut trace = Vec::new();
    let mut accepted: Vec<EigenPairResult> = Vec::new();
    let mut strays = Vec::new();
    let mut warm: Vec<Vec<f64>> = Vec::new();
    let mut steps = 0;
    let mut failure = None;

    let terminated_by = 'outer: loop {
        if steps >= max_steps {
            break TerminatedBy::StepCap;
        }
        let mut lcfg = cfg.lanczos.clone();
        lcfg.seed = cfg.lanczos.seed.wrapping_add(steps as u64);
        let out = match lanczos_lowest(&state, anorm.value, &lcfg, &warm) {
            Ok(out) => out,
            Err(e) => {
                failure = Some(e.to_string());
                break TerminatedBy::SolverFailure;
            }
        };
        steps += 1;
        observer(&DriverEvent::Solved {
            call: steps,
            converged: out.pairs.len(),
            iterations: out.iterations,
            restarts: out.restarts,
        });

        let mut carry = Vec::new();
        for (b, pair) in out.pairs.iter().enumerate() {
            if !carry.is_empty() {
                carry.push(pair.vector.clone());
                continue;
            }
            if stopping_check(pair.lambda, cfg.hi) {
                break 'outer TerminatedBy::SpectrumExit;
            }
            match state.push_eigenpair(pair) {
                Ok(()) => {}
                // Later pairs of a batch were converged against the
                // operator before this batch's earlier shifts; retry them.
                Err(EedError::ResidualContract { .. }) if b > 0 => {
                    carry.push(pair.vector.clone());
                    continue;
                }
                Err(e @ EedError::ShiftRejected { .. }) => return Err(e),
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer TerminatedBy::SolverFailure;
                }
            }
            let stored = EigenPairResult {
                residual_norm: *state.residual_norms().last().expect("just pushed"),
                ..pair.clone()
            };
            let report = if cfg.trace == TraceMode::PerStep {
                let k = state.len();
                let mut r = tracker.observe(
                    op,
                    state.eigvecs(),
                    state.eigvals(),
                    state.shifts(),
                    stored.residual_norm,
                )?;
                let e = state.residual_block();
                r.governing_residual = Some(governing_residual(&state, &e)?);
                if k > 1 {
                    r.cosine_residual = Some(cosine_identity_residual(&state, &e, k - 1)?);
                }
                trace.push(r);
                trace.last()
            } else {
                None
            };
            observer(&DriverEvent::Accepted {
                index: state.len(),
                lambda: stored.lambda,
                report,
            });
            if is_stray(stored.lambda, cfg.lo, cfg.tol * anorm.value) {
                strays.push(stored);
            } else {
                accepted.push(stored);
            }
        }
        carry.extend(out.warm_vectors);
        carry.truncate(cfg.lanczos.warm_start_cap);
        warm = carry;
    };

    if cfg.trace == TraceMode::Final {
        trace = trace_from_state(&state)?;
        if let Some(last) = trace.last_mut() {
            last.governing_residual = Some(governing_residual(&state, &state.residual_block())?);
        }
    }
    accepted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let (gamma_g, tau_g) = match state.mu() {
        Some(mu) if mu > cfg.hi => (Some(mu - cfg.hi), Some((mu - cfg.lo) / (mu - cfg.hi))),
        _ => (None, None),
    };
    Ok(EedRunResult {
        pairs: accepted,
        strays,
        state,
        trace,
        eed_steps: steps,
        terminated_by,
        failure,
        warnings,
        gamma_g,
        tau_g,
    })
}
