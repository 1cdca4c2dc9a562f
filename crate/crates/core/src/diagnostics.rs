//! Stability diagnostics for a deflation run.
//!
//! Notation: after a step the state holds `k = j + 1` pairs. `omega` is the
//! orthogonality defect `||V^T V - I||_F` of all `k` vectors, `R = A V - V
//! Lambda` is the residual against the original operator, and `E` collects
//! the solver residuals `eta_i`. The gap `gamma_j` and ratio `tau_j` only
//! involve the first `j` shifts, and `c_j` uses the defect of the first `j`
//! vectors.
//!
//! Bounds that are inapplicable (hypotheses violated, or undefined at the
//! first step) are `None`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::deflation::{DeflationState, ResidualBlock};
use crate::error::{EedError, Result};
use crate::linalg::{axpy, dot, orthonormality_defect};
use crate::operator::SymmetricOperator;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One row of the per-step trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Number of accepted pairs `j + 1`.
    pub step: usize,
    pub lambda: f64,
    pub shift: f64,
    pub gamma: Option<f64>,
    pub tau: f64,
    pub c: Option<f64>,
    pub omega: f64,
    pub omega_bound: Option<f64>,
    pub res_frob: f64,
    pub res_bound: Option<f64>,
    pub e_frob: f64,
    pub delta_bound: Option<f64>,
    pub sun_estimate: Option<f64>,
    pub omega_bound_explicit: Option<f64>,
    pub delta_bound_explicit: Option<f64>,
    pub assumption_ok: bool,
    pub stability_ok: bool,
    pub governing_residual: Option<f64>,
    pub cosine_residual: Option<f64>,
}

/// Absolute slack granted to measured quantities for rounding in their own
/// evaluation: `100 eps sqrt(k)` for `omega`, times `sqrt(n) anorm` for
/// residual-type norms.
pub fn rounding_floor(k: usize, n: usize, anorm: f64) -> (f64, f64) {
    let w = 100.0 * f64::EPSILON * (k as f64).sqrt();
    (w, w * (n as f64).sqrt() * anorm)
}

impl DiagnosticsReport {
    /// Descriptions of every applicable bound that the measured values
    /// exceed.
    pub fn bound_violations(&self, n: usize, anorm: f64) -> Vec<String> {
        let (wf, rf) = rounding_floor(self.step, n, anorm);
        let mut out = Vec::new();
        let mut check = |name: &str, measured: f64, bound: Option<f64>, floor: f64| {
            if let Some(b) = bound {
                if measured > b * (1.0 + 1e-10) + floor {
                    out.push(format!(
                        "step {}: {name} {measured:e} exceeds bound {b:e}",
                        self.step
                    ));
                }
            }
        };
        check("omega", self.omega, self.omega_bound, wf);
        check("||R||_F", self.res_frob, self.res_bound, rf);
        if let Some(s) = self.sun_estimate {
            check("Sun estimate", s, self.delta_bound, rf);
        }
        if self.assumption_ok {
            check(
                "omega (explicit)",
                self.omega,
                self.omega_bound_explicit,
                wf,
            );
            check(
                "||R||_F (explicit)",
                self.res_frob,
                self.delta_bound_explicit,
                rf,
            );
            if let Some(s) = self.sun_estimate {
                check("Sun estimate (explicit)", s, self.delta_bound_explicit, rf);
            }
        }
        out
    }
}

/// `||V^T V - I||_F`.
pub fn loss_of_orthogonality(v: &[Vec<f64>]) -> f64 {
    orthonormality_defect(v)
}

/// Smallest distance between the computed eigenvalues `eigvals` (plus
/// `lambda_next`) and the shifted values `eigvals[i] + shifts[i]`.
/// Infinite when no shift has been applied.
pub fn spectral_gap(eigvals: &[f64], shifts: &[f64], lambda_next: f64) -> f64 {
    let shifted: Vec<f64> = eigvals.iter().zip(shifts).map(|(l, s)| l + s).collect();
    eigvals
        .iter()
        .chain(std::iter::once(&lambda_next))
        .flat_map(|l| shifted.iter().map(move |t| (l - t).abs()))
        .fold(f64::INFINITY, f64::min)
}

/// `max |sigma_i| / gamma`.
pub fn shift_gap_ratio(shifts: &[f64], gamma: f64) -> f64 {
    shifts.iter().fold(0.0f64, |m, s| m.max(s.abs())) / gamma
}

/// `c = (1 - tau omega / sqrt 2)^{-1}`, defined when `tau omega < sqrt 2`.
pub fn shrink_factor(tau: f64, omega_prev: f64) -> Option<f64> {
    let t = tau * omega_prev;
    (t < SQRT2).then(|| 1.0 / (1.0 - t / SQRT2))
}

fn valid_c(c: f64) -> bool {
    c.is_finite() && c >= 1.0
}

/// Bound on `omega_{j+1}`: `2 (c/gamma) (1 + 2 (c/gamma) ||E||_F) ||E||_F`.
pub fn omega_upper_bound(c: f64, gamma: f64, e_frob: f64) -> Option<f64> {
    if !valid_c(c) || !(gamma > 0.0) {
        return None;
    }
    let r = c / gamma;
    Some(2.0 * r * (1.0 + 2.0 * r * e_frob) * e_frob)
}

/// Bound on `||R_{j+1}||_F`: `(1 + sqrt2 c tau (1 + omega)) ||E||_F`.
pub fn residual_upper_bound(c: f64, tau: f64, omega_next: f64, e_frob: f64) -> Option<f64> {
    valid_c(c).then_some((1.0 + SQRT2 * c * tau * (1.0 + omega_next)) * e_frob)
}

/// Bound on the symmetric backward error:
/// `sqrt2 (1 + c tau (1 + omega)) / sqrt(1 - omega) ||E||_F`, for `omega < 1`.
pub fn backward_error_upper_bound(c: f64, tau: f64, omega_next: f64, e_frob: f64) -> Option<f64> {
    (valid_c(c) && omega_next < 1.0)
        .then(|| SQRT2 * (1.0 + c * tau * (1.0 + omega_next)) / (1.0 - omega_next).sqrt() * e_frob)
}

/// `R = A V - V Lambda` and its Frobenius norm.
pub fn residual_block(
    a: &dyn SymmetricOperator,
    v: &[Vec<f64>],
    lambda: &[f64],
) -> Result<(Vec<Vec<f64>>, f64)> {
    if v.len() != lambda.len() {
        return Err(EedError::DimensionMismatch {
            expected: v.len(),
            found: lambda.len(),
        });
    }
    let mut cols = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for (x, l) in v.iter().zip(lambda) {
        let mut r = a.matvec(x)?;
        axpy(-l, x, &mut r);
        acc += dot(&r, &r);
        cols.push(r);
    }
    Ok((cols, acc.sqrt()))
}

/// Backward error estimate from the polar factor of `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunEstimate {
    /// `sqrt(||R||_F^2 + ||P_perp R||_F^2) / sigma_min(V)`.
    pub estimate: f64,
    /// Plain `||R||_F`.
    pub res_frob: f64,
    pub sigma_min: f64,
}

/// Evaluate the estimate from `G = V^T V`, `M = V^T R` and `||R||_F^2`,
/// using `||P_perp R||^2 = ||R||^2 - tr(M^T G^{-1} M)`.
fn sun_from_gram(g: &DMatrix<f64>, m: &DMatrix<f64>, r_sq: f64) -> Result<SunEstimate> {
    let eig = SymmetricEigen::new(g.clone());
    let lmin = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let k = g.nrows() as f64;
    if !(lmin > k * f64::EPSILON) {
        return Err(EedError::RankDeficient);
    }
    let chol = g.clone().cholesky().ok_or(EedError::RankDeficient)?;
    let x = chol.solve(m);
    let proj = m.component_mul(&x).sum();
    let perp_sq = (r_sq - proj).max(0.0);
    let sigma_min = lmin.sqrt();
    Ok(SunEstimate {
        estimate: (r_sq + perp_sq).sqrt() / sigma_min,
        res_frob: r_sq.sqrt(),
        sigma_min,
    })
}

/// Backward error estimate for the pairs `(lambda_i, v_i)` against `a`.
pub fn sun_backward_error_estimate(
    a: &dyn SymmetricOperator,
    v: &[Vec<f64>],
    lambda: &[f64],
) -> Result<SunEstimate> {
    let (r, res) = residual_block(a, v, lambda)?;
    let k = v.len();
    let g = DMatrix::from_fn(k, k, |i, l| dot(&v[i], &v[l]));
    let m = DMatrix::from_fn(k, k, |i, l| dot(&v[i], &r[l]));
    sun_from_gram(&g, &m, res * res)
}

/// `tau (anorm/gamma) 4 sqrt(j+1) tol < 0.1`.
pub fn check_assumption(j: usize, anorm: f64, gamma: f64, tau: f64, tol: f64) -> bool {
    tau * (anorm / gamma) * 4.0 * ((j + 1) as f64).sqrt() * tol < 0.1
}

/// `((anorm/gamma) 5 sqrt(j+1) tol, tau 5 sqrt(j+1) tol anorm)`, or `None`
/// when the assumption fails.
pub fn explicit_bounds(j: usize, anorm: f64, gamma: f64, tau: f64, tol: f64) -> Option<(f64, f64)> {
    if !check_assumption(j, anorm, gamma, tau, tol) {
        return None;
    }
    let s = 5.0 * ((j + 1) as f64).sqrt() * tol;
    Some((anorm / gamma * s, tau * s * anorm))
}

/// The rule-of-thumb stability condition `anorm/gamma <= 4` and `tau <= 4`.
pub fn stability_condition(anorm: f64, gamma: f64, tau: f64) -> bool {
    anorm / gamma <= 4.0 && tau <= 4.0
}

/// Residual of the identity relating `V_i^T v_{i+1}` to the stored solver
/// residuals:
///
/// `V_i^T v_{i+1} = (Gamma_i + Phi_i^T Sigma_i)^{-1} (V_i^T eta_{i+1} - E_i^T v_{i+1})`
///
/// with `Gamma_i = diag(lambda_k + sigma_k - lambda_{i+1})`. The matrix is
/// upper triangular, so the right side is a back substitution. `i` counts
/// vectors: `1 <= i < j`.
pub fn cosine_identity_residual(
    state: &DeflationState<'_>,
    e_block: &ResidualBlock,
    i: usize,
) -> Result<f64> {
    let v = state.eigvecs();
    let lam = state.eigvals();
    let sig = state.shifts();
    if i == 0 || i >= v.len() || e_block.columns.len() != v.len() {
        return Err(EedError::InvalidConfig(format!(
            "cosine identity index {i} outside 1..{}",
            v.len()
        )));
    }
    let next = &v[i];
    let eta = &e_block.columns[i];
    let lhs: Vec<f64> = v[..i].iter().map(|x| dot(x, next)).collect();
    let rhs: Vec<f64> = (0..i)
        .map(|l| dot(&v[l], eta) - dot(&e_block.columns[l], next))
        .collect();
    let scale = state.anorm().value.max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; i];
    for l in (0..i).rev() {
        let g = lam[l] + sig[l] - lam[i];
        if g.abs() <= f64::EPSILON * scale {
            return Err(EedError::SingularGamma { index: l });
        }
        let mut s = rhs[l];
        for k in (l + 1)..i {
            s -= dot(&v[k], &v[l]) * sig[k] * x[k];
        }
        x[l] = s / g;
    }
    Ok(lhs
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Incremental evaluation of the per-step diagnostics. Holds the Gram
/// matrix, `V^T R` and the residual columns, so each step costs `O(n k)`
/// plus a `k x k` factorization.
pub struct DiagnosticsTracker {
    anorm: f64,
    tol: f64,
    gram: Vec<Vec<f64>>,
    vtr: Vec<Vec<f64>>,
    res_cols: Vec<Vec<f64>>,
    omega_sq: f64,
    r_sq: f64,
    e_sq: f64,
}

impl DiagnosticsTracker {
    pub fn new(anorm: f64, tol: f64) -> Self {
        DiagnosticsTracker {
            anorm,
            tol,
            gram: Vec::new(),
            vtr: Vec::new(),
            res_cols: Vec::new(),
            omega_sq: 0.0,
            r_sq: 0.0,
            e_sq: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.gram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.is_empty()
    }

    /// Account for the newest pair, `vectors.last()`. `vectors`, `eigvals`
    /// and `shifts` list every accepted pair in acceptance order and must
    /// extend what was seen before by exactly one.
    pub fn observe(
        &mut self,
        a: &dyn SymmetricOperator,
        vectors: &[Vec<f64>],
        eigvals: &[f64],
        shifts: &[f64],
        eta_norm: f64,
    ) -> Result<DiagnosticsReport> {
        let k = vectors.len();
        if k != self.len() + 1 || eigvals.len() != k || shifts.len() != k {
            return Err(EedError::DimensionMismatch {
                expected: self.len() + 1,
                found: k,
            });
        }
        let j = k - 1;
        let v_new = &vectors[j];
        let lambda = eigvals[j];
        let omega_prev = self.omega_sq.sqrt();

        let mut r_new = a.matvec(v_new)?;
        axpy(-lambda, v_new, &mut r_new);

        let g_row: Vec<f64> = vectors.iter().map(|x| dot(v_new, x)).collect();
        for (l, g) in g_row.iter().enumerate().take(j) {
            self.gram[l].push(*g);
            self.omega_sq += 2.0 * g * g;
        }
        self.omega_sq += (g_row[j] - 1.0).powi(2);
        self.gram.push(g_row);

        // V^T R gains a row (v_new against old residuals) and a column.
        let m_row: Vec<f64> = self
            .res_cols
            .iter()
            .map(|r| dot(v_new, r))
            .chain(std::iter::once(dot(v_new, &r_new)))
            .collect();
        for (l, row) in self.vtr.iter_mut().enumerate() {
            row.push(dot(&vectors[l], &r_new));
        }
        self.vtr.push(m_row);

        self.r_sq += dot(&r_new, &r_new);
        self.res_cols.push(r_new);
        self.e_sq += eta_norm * eta_norm;

        let omega = self.omega_sq.sqrt();
        let res_frob = self.r_sq.sqrt();
        let e_frob = self.e_sq.sqrt();

        let g = DMatrix::from_fn(k, k, |r, c| self.gram[r][c]);
        let m = DMatrix::from_fn(k, k, |r, c| self.vtr[r][c]);
        let sun = sun_from_gram(&g, &m, self.r_sq).ok().map(|s| s.estimate);

        let (gamma, tau) = if j == 0 {
            (None, 0.0)
        } else {
            let gamma = spectral_gap(&eigvals[..j], &shifts[..j], lambda);
            (Some(gamma), shift_gap_ratio(&shifts[..j], gamma))
        };
        let c = shrink_factor(tau, omega_prev);
        let (omega_bound, explicit, assumption_ok, stability_ok) = match gamma {
            Some(gm) => (
                c.and_then(|c| omega_upper_bound(c, gm, e_frob)),
                explicit_bounds(j, self.anorm, gm, tau, self.tol),
                check_assumption(j, self.anorm, gm, tau, self.tol),
                stability_condition(self.anorm, gm, tau),
            ),
            None => (None, None, true, true),
        };
        Ok(DiagnosticsReport {
            step: k,
            lambda,
            shift: shifts[j],
            gamma,
            tau,
            c,
            omega,
            omega_bound,
            res_frob,
            res_bound: c.and_then(|c| residual_upper_bound(c, tau, omega, e_frob)),
            e_frob,
            delta_bound: c.and_then(|c| backward_error_upper_bound(c, tau, omega, e_frob)),
            sun_estimate: sun,
            omega_bound_explicit: explicit.map(|e| e.0),
            delta_bound_explicit: explicit.map(|e| e.1),
            assumption_ok,
            stability_ok,
            governing_residual: None,
            cosine_residual: None,
        })
    }
}

/// The diagnostics trace of a complete state, recomputed from scratch.
pub fn trace_from_state(state: &DeflationState<'_>) -> Result<Vec<DiagnosticsReport>> {
    let mut tr = DiagnosticsTracker::new(state.anorm().value, state.tol());
    (1..=state.len())
        .map(|k| {
            tr.observe(
                state.base(),
                &state.eigvecs()[..k],
                &state.eigvals()[..k],
                &state.shifts()[..k],
                state.residual_norms()[k - 1],
            )
        })
        .collect()
}
