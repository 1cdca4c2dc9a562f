//! WebAssembly bindings for the browser demo. Each export takes plain
//! numbers and strings and returns a JSON document; the native functions
//! behind them are what the tests exercise.

use eed_core::diagnostics::{
    check_assumption, explicit_bounds, shift_gap_ratio, spectral_gap, stability_condition,
};
use eed_core::driver::{run_eed, SolverConfig};
use eed_core::generators::from_spec;
use eed_core::oracle::eigencount_in_interval;
use eed_core::{MuStrategy, SymmetricOperator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest generated matrix the demo will solve in the page.
pub const MAX_DIM: usize = 4000;

#[derive(Debug, Serialize)]
pub struct StepView {
    pub step: usize,
    pub lambda: f64,
    pub shift: f64,
    pub gamma: Option<f64>,
    pub tau: f64,
    pub omega: f64,
    pub omega_bound: Option<f64>,
    pub res_frob: f64,
    pub delta_bound: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SolveView {
    pub n: usize,
    pub anorm: f64,
    pub mu: Option<f64>,
    pub lambdas: Vec<f64>,
    pub steps: Vec<StepView>,
    pub gamma_g: Option<f64>,
    pub tau_g: Option<f64>,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ShiftStep {
    pub step: usize,
    pub lambda: f64,
    pub shift: f64,
    pub gamma: f64,
    pub tau: f64,
    pub assumption_ok: bool,
    pub stability_ok: bool,
    pub omega_explicit: Option<f64>,
    pub delta_explicit: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ShiftView {
    pub mu: f64,
    pub gamma_g: Option<f64>,
    pub tau_g: Option<f64>,
    pub steps: Vec<ShiftStep>,
}

fn load(gen: &str) -> Result<eed_core::CsrMatrix, String> {
    let a = from_spec(gen).map_err(|e| e.to_string())?;
    if a.dim() > MAX_DIM {
        return Err(format!(
            "dimension {} exceeds the demo limit {MAX_DIM}",
            a.dim()
        ));
    }
    Ok(a)
}

/// Run the deflation loop on a generated matrix.
pub fn solve_native(
    gen: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    m: usize,
    mu: Option<f64>,
    seed: u64,
) -> Result<SolveView, String> {
    let a = load(gen)?;
    let mut cfg = SolverConfig::new(lo, hi, tol, m);
    cfg.mu = mu.map_or(MuStrategy::Recommended, MuStrategy::Fixed);
    cfg.lanczos.seed = seed;
    let res = run_eed(&a, &cfg).map_err(|e| e.to_string())?;
    Ok(SolveView {
        n: a.dim(),
        anorm: res.anorm(),
        mu: res.state.mu(),
        lambdas: res.pairs.iter().map(|p| p.lambda).collect(),
        steps: res
            .trace
            .iter()
            .map(|t| StepView {
                step: t.step,
                lambda: t.lambda,
                shift: t.shift,
                gamma: t.gamma,
                tau: t.tau,
                omega: t.omega,
                omega_bound: t.omega_bound,
                res_frob: t.res_frob,
                delta_bound: t.delta_bound,
            })
            .collect(),
        gamma_g: res.gamma_g,
        tau_g: res.tau_g,
        failure: res.failure.clone(),
        warnings: res.warnings.clone(),
    })
}

/// Gap, shift ratio and explicit bounds for a hypothetical run that
/// accepts `eigvals` in order with shift target `mu` (default
/// `eigvals[0] + anorm`).
pub fn explore_shifts_native(
    eigvals: &[f64],
    lo: f64,
    hi: f64,
    anorm: f64,
    tol: f64,
    mu: Option<f64>,
) -> Result<ShiftView, String> {
    let first = *eigvals.first().ok_or("no eigenvalues given")?;
    if !(anorm > 0.0 && tol > 0.0 && lo < hi) {
        return Err("need anorm > 0, tol > 0 and lo < hi".into());
    }
    let mu = mu.unwrap_or(first + anorm);
    let shifts: Vec<f64> = eigvals.iter().map(|l| mu - l).collect();
    if let Some(k) = shifts.iter().position(|&s| s.is_nan() || s <= 0.0) {
        return Err(format!(
            "shift for eigenvalue {} is not positive",
            eigvals[k]
        ));
    }
    let steps = (1..eigvals.len())
        .map(|j| {
            let gamma = spectral_gap(&eigvals[..j], &shifts[..j], eigvals[j]);
            let tau = shift_gap_ratio(&shifts[..j], gamma);
            let explicit = explicit_bounds(j, anorm, gamma, tau, tol);
            ShiftStep {
                step: j + 1,
                lambda: eigvals[j],
                shift: shifts[j],
                gamma,
                tau,
                assumption_ok: check_assumption(j, anorm, gamma, tau, tol),
                stability_ok: stability_condition(anorm, gamma, tau),
                omega_explicit: explicit.map(|e| e.0),
                delta_explicit: explicit.map(|e| e.1),
            }
        })
        .collect();
    let (gamma_g, tau_g) = if mu > hi {
        (Some(mu - hi), Some((mu - lo) / (mu - hi)))
    } else {
        (None, None)
    };
    Ok(ShiftView {
        mu,
        gamma_g,
        tau_g,
        steps,
    })
}

/// Exact eigenvalue count in `[lo, hi]` from the inertia oracle.
pub fn count_native(gen: &str, lo: f64, hi: f64) -> Result<usize, String> {
    eigencount_in_interval(&load(gen)?, lo, hi).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// `mu` of `NaN` selects the recommended shift.
#[wasm_bindgen]
pub fn solve(
    gen: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    m: usize,
    mu: f64,
    seed: u32,
) -> Result<String, JsError> {
    let mu = (!mu.is_nan()).then_some(mu);
    to_json(solve_native(gen, lo, hi, tol, m, mu, u64::from(seed)))
}

#[wasm_bindgen]
pub fn explore_shifts(
    eigvals: &[f64],
    lo: f64,
    hi: f64,
    anorm: f64,
    tol: f64,
    mu: f64,
) -> Result<String, JsError> {
    let mu = (!mu.is_nan()).then_some(mu);
    to_json(explore_shifts_native(eigvals, lo, hi, anorm, tol, mu))
}

#[wasm_bindgen]
pub fn count(gen: &str, lo: f64, hi: f64) -> Result<String, JsError> {
    to_json(count_native(gen, lo, hi))
}
