//! The deflation state `(V, Sigma, Lambda)` and the deflated operator
//! `A_j = A + V_j Sigma_j V_j^T`, applied without ever forming it.

use serde::{Deserialize, Serialize};

use crate::error::{EedError, Result};
use crate::lanczos::EigenPairResult;
use crate::linalg::{axpy, dot, norm2};
use crate::operator::{NormEstimate, SymmetricOperator};

/// Maximum deviation of a stored eigenvector norm from one.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// How the shift parameter `mu` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuStrategy {
    /// `mu = lambda_1 + anorm`, frozen after the first accepted pair.
    Recommended,
    Fixed(f64),
}

/// Residual columns `E_j = [eta_1, ..., eta_j]`.
#[derive(Debug, Clone)]
pub struct ResidualBlock {
    pub columns: Vec<Vec<f64>>,
    pub frob_norm: f64,
}

impl ResidualBlock {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        let frob_norm = columns.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
        ResidualBlock { columns, frob_norm }
    }
}

pub struct DeflationState<'a> {
    base: &'a dyn SymmetricOperator,
    anorm: NormEstimate,
    tol: f64,
    strategy: MuStrategy,
    mu: Option<f64>,
    eigvals: Vec<f64>,
    eigvecs: Vec<Vec<f64>>,
    shifts: Vec<f64>,
    residuals: Vec<Vec<f64>>,
    residual_norms: Vec<f64>,
}

impl<'a> DeflationState<'a> {
    pub fn new(
        base: &'a dyn SymmetricOperator,
        anorm: NormEstimate,
        tol: f64,
        strategy: MuStrategy,
    ) -> Self {
        let mu = match strategy {
            MuStrategy::Fixed(mu) => Some(mu),
            MuStrategy::Recommended => None,
        };
        DeflationState {
            base,
            anorm,
            tol,
            strategy,
            mu,
            eigvals: Vec::new(),
            eigvecs: Vec::new(),
            shifts: Vec::new(),
            residuals: Vec::new(),
            residual_norms: Vec::new(),
        }
    }

    pub fn base(&self) -> &'a dyn SymmetricOperator {
        self.base
    }

    pub fn anorm(&self) -> &NormEstimate {
        &self.anorm
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn strategy(&self) -> MuStrategy {
        self.strategy
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    /// Number of deflated pairs `j`.
    pub fn len(&self) -> usize {
        self.eigvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigvals.is_empty()
    }

    /// Eigenvalues in acceptance order.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &[Vec<f64>] {
        &self.eigvecs
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    /// `eta_i = A_{i-1} v_i - lambda_i v_i`, recorded at acceptance.
    pub fn residual_block(&self) -> ResidualBlock {
        ResidualBlock::new(self.residuals.clone())
    }

    pub fn residual_columns(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    /// Fix `mu` for the recommended strategy. No effect once set.
    pub fn fix_mu(&mut self, lambda_1: f64) {
        if self.mu.is_none() {
            self.mu = Some(lambda_1 + self.anorm.value);
        }
    }

    /// `sigma = mu - lambda`; rejects non-positive shifts.
    pub fn select_shift(&self, lambda: f64) -> Result<f64> {
        let mu = self.mu.ok_or_else(|| {
            EedError::InvalidConfig("mu is not fixed before the first shift".into())
        })?;
        let shift = mu - lambda;
        if shift > 0.0 {
            Ok(shift)
        } else {
            Err(EedError::ShiftRejected {
                step: self.len() + 1,
                mu,
                lambda,
                shift,
            })
        }
    }

    /// One deflation step: record `eta` against the current operator, choose
    /// the shift and append the pair.
    pub fn push_eigenpair(&mut self, pair: &EigenPairResult) -> Result<()> {
        let n = self.base.dim();
        if pair.vector.len() != n {
            return Err(EedError::DimensionMismatch {
                expected: n,
                found: pair.vector.len(),
            });
        }
        let norm = norm2(&pair.vector);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(EedError::NotNormalized { norm });
        }
        let mut eta = self.matvec(&pair.vector)?;
        axpy(-pair.lambda, &pair.vector, &mut eta);
        let residual = norm2(&eta);
        let threshold = self.tol * self.anorm.value;
        if !(residual <= threshold) {
            return Err(EedError::ResidualContract {
                residual,
                threshold,
            });
        }
        if self.strategy == MuStrategy::Recommended {
            self.fix_mu(pair.lambda);
        }
        let shift = self.select_shift(pair.lambda)?;
        self.eigvals.push(pair.lambda);
        self.eigvecs.push(pair.vector.clone());
        self.shifts.push(shift);
        self.residuals.push(eta);
        self.residual_norms.push(residual);
        Ok(())
    }
}

impl SymmetricOperator for DeflationState<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        for (v, s) in self.eigvecs.iter().zip(&self.shifts) {
            axpy(s * dot(v, x), v, y);
        }
    }
}

/// `||A_j V_j - V_j (Lambda_j + Sigma_j) - V_j Sigma_j Phi_j - E_j||_F`, with
/// `Phi_j` the strictly lower triangle of `V_j^T V_j - I` (column order is
/// acceptance order). Zero up to rounding.
pub fn governing_residual(state: &DeflationState<'_>, e_block: &ResidualBlock) -> Result<f64> {
    let j = state.len();
    if e_block.columns.len() != j {
        return Err(EedError::DimensionMismatch {
            expected: j,
            found: e_block.columns.len(),
        });
    }
    let v = state.eigvecs();
    let lam = state.eigvals();
    let sig = state.shifts();
    let mut acc = 0.0;
    for i in 0..j {
        let mut col = state.matvec(&v[i])?;
        axpy(-(lam[i] + sig[i]), &v[i], &mut col);
        for k in (i + 1)..j {
            axpy(-sig[k] * dot(&v[k], &v[i]), &v[k], &mut col);
        }
        axpy(-1.0, &e_block.columns[i], &mut col);
        acc += dot(&col, &col);
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CsrMatrix, DenseSymMatrix};

    fn pair(lambda: f64, vector: Vec<f64>) -> EigenPairResult {
        EigenPairResult {
            lambda,
            vector,
            residual_norm: 0.0,
            iterations: 0,
            restarts: 0,
        }
    }

    #[test]
    fn empty_state_is_base_operator() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(3.0),
            1e-8,
            MuStrategy::Recommended,
        );
        let x = [1.0, -1.0, 0.5];
        assert_eq!(s.matvec(&x).unwrap(), a.matvec(&x).unwrap());
    }

    #[test]
    fn exact_eigenvector_is_displaced() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
        let mut s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(2.0),
            1e-8,
            MuStrategy::Fixed(4.0),
        );
        s.push_eigenpair(&pair(1.0, vec![1.0, 0.0])).unwrap();
        assert_eq!(s.shifts(), &[3.0]);
        assert_eq!(s.matvec(&[1.0, 0.0]).unwrap(), vec![4.0, 0.0]);
    }

    #[test]
    fn recommended_mu_is_frozen() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 5.0]);
        let mut s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(5.0),
            1e-8,
            MuStrategy::Recommended,
        );
        s.push_eigenpair(&pair(1.0, vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.mu(), Some(6.0));
        s.push_eigenpair(&pair(2.0, vec![0.0, 1.0, 0.0])).unwrap();
        assert_eq!(s.mu(), Some(6.0));
        assert_eq!(s.shifts(), &[5.0, 4.0]);
    }

    #[test]
    fn shift_arithmetic() {
        let a = CsrMatrix::from_diagonal(&[1.0]);
        let s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(1.0),
            1e-8,
            MuStrategy::Fixed(1.0),
        );
        assert!((s.select_shift(1e-4).unwrap() - 0.9999).abs() < 1e-15);
        assert!(matches!(
            s.select_shift(1.0),
            Err(EedError::ShiftRejected { .. })
        ));
        let s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(1.0),
            1e-8,
            MuStrategy::Fixed(2e-4),
        );
        assert!((s.select_shift(0.5e-4).unwrap() - 1.5e-4).abs() < 1e-18);
    }

    #[test]
    fn residual_contract_enforced() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
        let mut s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(2.0),
            1e-8,
            MuStrategy::Recommended,
        );
        assert!(matches!(
            s.push_eigenpair(&pair(1.1, vec![1.0, 0.0])),
            Err(EedError::ResidualContract { .. })
        ));
        assert!(matches!(
            s.push_eigenpair(&pair(1.0, vec![1.0, 1e-5])),
            Err(EedError::NotNormalized { .. })
        ));
        assert!(s.is_empty());
    }

    #[test]
    fn matches_dense_form() {
        let n = 8;
        let mut rng = crate::linalg::rng(2);
        use rand::Rng;
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                vals[i * n + k] = x;
                vals[k * n + i] = x;
            }
        }
        let a = DenseSymMatrix::new(n, vals).unwrap();
        let vs: Vec<Vec<f64>> = (0..3)
            .map(|s| crate::linalg::random_unit_vector(n, 100 + s))
            .collect();
        let mut s = DeflationState::new(
            &a,
            NormEstimate::user_supplied(1.0),
            10.0,
            MuStrategy::Fixed(5.0),
        );
        for v in &vs {
            let av = a.matvec(v).unwrap();
            s.push_eigenpair(&pair(dot(v, &av), v.clone())).unwrap();
        }
        let dense = a.plus_low_rank(&vs, s.shifts());
        let x = crate::linalg::random_unit_vector(n, 7);
        let y1 = s.matvec(&x).unwrap();
        let y2 = dense.matvec(&x).unwrap();
        let diff: f64 = y1
            .iter()
            .zip(&y2)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-13 * norm2(&y2));
        let g = governing_residual(&s, &s.residual_block()).unwrap();
        assert!(g <= 100.0 * n as f64 * f64::EPSILON * 5.0, "{g}");
    }
}
