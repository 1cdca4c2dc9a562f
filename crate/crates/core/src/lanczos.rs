//! Thick-restart Lanczos for the lowest eigenpairs of a symmetric operator.
//!
//! The basis is kept explicitly orthonormal (two-pass classical
//! Gram-Schmidt on every new vector) and the images `A q` are stored next to
//! the basis vectors, so Ritz residuals are evaluated directly instead of
//! being inferred from the Lanczos recurrence. From a single start vector the
//! expansion `q_{k+1} ~ (I - QQ^T) A q_k` reproduces the Krylov space; after a
//! restart (or a warm start with a block of vectors) the first new direction
//! is the residual of the lowest Ritz vector, which is the continuation vector
//! of a thick restart.
//!
//! Every returned pair has its residual recomputed with a fresh product
//! `A v - lambda v`; the recurrence is never trusted for the final contract.

use serde::{Deserialize, Serialize};

use crate::error::{EedError, Result};
use crate::linalg::{
    axpy, combine, dot, norm2, orthogonalize, orthonormality_defect, random_unit_vector, scale,
};
use crate::operator::SymmetricOperator;
use crate::tridiagonal::{symmetric_eigen, tridiagonal_eigen, SmallEigen};

/// When the convergence test runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceCheck {
    PerIteration,
    PerRestart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Maximal dimension `m` of the projection subspace.
    pub max_basis: usize,
    /// Cap `m0` on warm-start vectors, and on unconverged Ritz vectors kept
    /// across a thick restart.
    pub warm_start_cap: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    pub convergence_check: ConvergenceCheck,
}

impl LanczosConfig {
    pub fn new(max_basis: usize, tol: f64) -> Self {
        LanczosConfig {
            max_basis,
            warm_start_cap: max_basis / 2,
            tol,
            max_restarts: 20_000,
            seed: 0,
            convergence_check: ConvergenceCheck::PerIteration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_basis < 2 {
            return Err(EedError::InvalidConfig("max_basis must exceed 1".into()));
        }
        if self.warm_start_cap >= self.max_basis {
            return Err(EedError::InvalidConfig(
                "warm_start_cap must be below max_basis".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(EedError::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }
}

/// One converged eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairResult {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `||A v - lambda v||_2`, recomputed with a fresh operator application.
    pub residual_norm: f64,
    pub iterations: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct LanczosOutcome {
    /// Converged lowest pairs, ascending. Never empty.
    pub pairs: Vec<EigenPairResult>,
    /// Lowest unconverged Ritz vectors (at most `warm_start_cap`), for
    /// warm-starting the next solve.
    pub warm_vectors: Vec<Vec<f64>>,
    /// Lowest Ritz value observed at each restart.
    pub lowest_ritz_history: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
}

/// A Ritz pair of a projected problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Projected matrix `B^T A B` handed to [`rayleigh_ritz`].
#[derive(Debug, Clone)]
pub enum Projected {
    Tridiagonal {
        diag: Vec<f64>,
        off: Vec<f64>,
    },
    /// Row-major `dim * dim` symmetric matrix.
    Dense {
        dim: usize,
        values: Vec<f64>,
    },
}

impl Projected {
    fn dim(&self) -> usize {
        match self {
            Projected::Tridiagonal { diag, .. } => diag.len(),
            Projected::Dense { dim, .. } => *dim,
        }
    }

    fn eigen(&self) -> Result<SmallEigen> {
        match self {
            Projected::Tridiagonal { diag, off } => tridiagonal_eigen(diag, off),
            Projected::Dense { dim, values } => symmetric_eigen(values, *dim),
        }
    }
}

const BASIS_ORTHO_TOL: f64 = 1e-10;

/// Ritz pairs (ascending) of the projected matrix lifted through `basis`.
pub fn rayleigh_ritz(basis: &[Vec<f64>], projected: &Projected) -> Result<Vec<RitzPair>> {
    if basis.len() != projected.dim() {
        return Err(EedError::DimensionMismatch {
            expected: projected.dim(),
            found: basis.len(),
        });
    }
    let defect = orthonormality_defect(basis);
    if defect > BASIS_ORTHO_TOL {
        return Err(EedError::OrthogonalityLost(defect));
    }
    let n = basis.first().map_or(0, Vec::len);
    let eig = projected.eigen()?;
    Ok(eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .map(|(value, x)| {
            let mut vector = combine(basis, &x, n);
            let nrm = norm2(&vector);
            scale(1.0 / nrm, &mut vector);
            RitzPair { value, vector }
        })
        .collect())
}

/// Orthonormal Krylov basis `span{x, Ax, ..., A^{k-1}x}` built with full
/// reorthogonalization, together with its tridiagonal projection.
pub fn krylov_basis(
    op: &dyn SymmetricOperator,
    start: &[f64],
    k: usize,
) -> Result<(Vec<Vec<f64>>, Projected)> {
    let n = op.dim();
    if start.len() != n {
        return Err(EedError::DimensionMismatch {
            expected: n,
            found: start.len(),
        });
    }
    let mut q = start.to_vec();
    let nrm = norm2(&q);
    if nrm == 0.0 {
        return Err(EedError::InvalidConfig("zero start vector".into()));
    }
    scale(1.0 / nrm, &mut q);
    let mut basis = vec![q];
    let mut diag = Vec::new();
    let mut off = Vec::new();
    let mut w = vec![0.0; n];
    while basis.len() <= k.min(n) {
        let last = basis.len() - 1;
        op.apply(&basis[last], &mut w);
        diag.push(dot(&basis[last], &w));
        if basis.len() == k.min(n) {
            break;
        }
        orthogonalize(&basis, &mut w);
        let b = norm2(&w);
        if b <= f64::EPSILON * norm2(&diag) {
            break;
        }
        off.push(b);
        let mut next = w.clone();
        scale(1.0 / b, &mut next);
        basis.push(next);
    }
    Ok((basis, Projected::Tridiagonal { diag, off }))
}

/// Orthonormal basis `Q`, images `W = A Q`, and `H = Q^T A Q`.
struct Subspace {
    cap: usize,
    q: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    h: Vec<f64>,
}

impl Subspace {
    fn new(cap: usize) -> Self {
        Subspace {
            cap,
            q: Vec::with_capacity(cap),
            w: Vec::with_capacity(cap),
            h: vec![0.0; cap * cap],
        }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Orthonormalize `v` against the basis and append it. Returns `false`
    /// when `v` is numerically inside the current span.
    fn push(&mut self, op: &dyn SymmetricOperator, mut v: Vec<f64>) -> bool {
        let before = norm2(&v);
        if before == 0.0 || !before.is_finite() {
            return false;
        }
        orthogonalize(&self.q, &mut v);
        let mut after = norm2(&v);
        if after < 1e-8 * before {
            orthogonalize(&self.q, &mut v);
            after = norm2(&v);
        }
        if after <= 1e-12 * before {
            return false;
        }
        scale(1.0 / after, &mut v);
        let mut av = vec![0.0; v.len()];
        op.apply(&v, &mut av);
        let k = self.q.len();
        for i in 0..k {
            let hik = dot(&self.q[i], &av);
            self.h[i * self.cap + k] = hik;
            self.h[k * self.cap + i] = hik;
        }
        self.h[k * self.cap + k] = dot(&v, &av);
        self.q.push(v);
        self.w.push(av);
        true
    }

    fn eigen(&self) -> Result<SmallEigen> {
        let k = self.len();
        let mut hk = vec![0.0; k * k];
        for i in 0..k {
            hk[i * k..(i + 1) * k].copy_from_slice(&self.h[i * self.cap..i * self.cap + k]);
        }
        symmetric_eigen(&hk, k)
    }

    /// Ritz vector `Q x`, its image `W x`, both scaled to a unit Ritz vector.
    fn lift(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.q[0].len();
        let mut y = combine(&self.q, x, n);
        let mut ay = combine(&self.w, x, n);
        let nrm = norm2(&y);
        scale(1.0 / nrm, &mut y);
        scale(1.0 / nrm, &mut ay);
        (y, ay)
    }

    /// Replace the basis by the Ritz vectors selected by `xs`.
    fn rotate(&mut self, values: &[f64], xs: &[&Vec<f64>]) {
        let n = self.q[0].len();
        let mut q = Vec::with_capacity(self.cap);
        let mut w = Vec::with_capacity(self.cap);
        for x in xs {
            q.push(combine(&self.q, x, n));
            w.push(combine(&self.w, x, n));
        }
        self.q = q;
        self.w = w;
        self.h.iter_mut().for_each(|e| *e = 0.0);
        for (i, v) in values.iter().enumerate() {
            self.h[i * self.cap + i] = *v;
        }
    }

    /// Re-orthonormalize the basis from scratch and rebuild `W` and `H`.
    fn rebuild(&mut self, op: &dyn SymmetricOperator) -> Result<()> {
        let old = std::mem::take(&mut self.q);
        self.w.clear();
        self.h.iter_mut().for_each(|e| *e = 0.0);
        for v in old {
            self.push(op, v);
        }
        let defect = orthonormality_defect(&self.q);
        if defect > BASIS_ORTHO_TOL {
            return Err(EedError::OrthogonalityLost(defect));
        }
        Ok(())
    }
}

fn residual(y: &[f64], ay: &[f64], theta: f64) -> Vec<f64> {
    let mut r = ay.to_vec();
    axpy(-theta, y, &mut r);
    r
}

/// Compute the lowest eigenpair(s) of `op` with `||A v - lambda v|| <= tol * anorm`.
///
/// `warm` supplies starting vectors (the first `warm_start_cap` are used);
/// a seeded random vector is always added to them.
pub fn lanczos_lowest(
    op: &dyn SymmetricOperator,
    anorm: f64,
    cfg: &LanczosConfig,
    warm: &[Vec<f64>],
) -> Result<LanczosOutcome> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(EedError::InvalidConfig("empty operator".into()));
    }
    if let Some(v) = warm.iter().find(|v| v.len() != n) {
        return Err(EedError::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let m = cfg.max_basis.min(n);
    let m0 = cfg.warm_start_cap.min(m - 1);
    let keep_unconverged = m0.max(1);
    let threshold = cfg.tol * anorm;

    let mut sub = Subspace::new(m);
    for v in warm.iter().take(m0) {
        sub.push(op, v.clone());
    }
    let mut fresh_seed = cfg.seed;
    while !sub.push(op, random_unit_vector(n, fresh_seed)) {
        fresh_seed = fresh_seed.wrapping_add(0x9e37_79b9);
        if sub.len() == m {
            break;
        }
    }

    let mut iterations = 0usize;
    let mut restarts = 0usize;
    let mut history = Vec::new();
    let mut expand_from_ritz = true;
    let mut best = (f64::NAN, f64::INFINITY);

    loop {
        let full = sub.len() == m;
        let check = full || cfg.convergence_check == ConvergenceCheck::PerIteration;
        let mut eig = None;
        if check || expand_from_ritz {
            let e = sub.eigen()?;
            if check {
                let pairs = converged_prefix(op, &sub, &e, threshold, iterations, restarts);
                if !pairs.is_empty() {
                    let start = pairs.len();
                    let warm_vectors = (start..e.values.len().min(start + m0))
                        .map(|k| sub.lift(&e.vectors[k]).0)
                        .collect();
                    return Ok(LanczosOutcome {
                        pairs,
                        warm_vectors,
                        lowest_ritz_history: history,
                        iterations,
                        restarts,
                    });
                }
                let (y, ay) = sub.lift(&e.vectors[0]);
                let est = norm2(&residual(&y, &ay, e.values[0]));
                if est < best.1 || full {
                    best = (e.values[0], est);
                }
            }
            eig = Some(e);
        }

        if full {
            let e = eig.take().expect("eigen computed when full");
            history.push(e.values[0]);
            if restarts >= cfg.max_restarts {
                return Err(EedError::NotConverged {
                    restarts,
                    best_lambda: best.0,
                    best_residual: best.1,
                });
            }
            let keep = keep_unconverged.min(m - 1);
            let xs: Vec<&Vec<f64>> = e.vectors.iter().take(keep).collect();
            sub.rotate(&e.values[..keep], &xs);
            restarts += 1;
            if restarts.is_multiple_of(32) && orthonormality_defect(&sub.q) > 1e-12 {
                sub.rebuild(op)?;
            }
            expand_from_ritz = true;
        }

        let next = if expand_from_ritz {
            expand_from_ritz = false;
            match eig {
                Some(e) => {
                    let (y, ay) = sub.lift(&e.vectors[0]);
                    residual(&y, &ay, e.values[0])
                }
                // Just rotated: column 0 is the lowest Ritz vector.
                None => residual(&sub.q[0], &sub.w[0], sub.h[0]),
            }
        } else {
            sub.w[sub.len() - 1].clone()
        };
        if !sub.push(op, next) {
            // Invariant subspace reached: continue from a fresh direction.
            loop {
                fresh_seed = fresh_seed.wrapping_add(0x9e37_79b9);
                if sub.push(op, random_unit_vector(n, fresh_seed)) || sub.len() == m {
                    break;
                }
            }
            expand_from_ritz = false;
        }
        iterations += 1;
    }
}

/// The longest run of Ritz pairs, from the bottom, that pass both the cheap
/// residual test and a fresh `A v - lambda v` evaluation.
fn converged_prefix(
    op: &dyn SymmetricOperator,
    sub: &Subspace,
    eig: &SmallEigen,
    threshold: f64,
    iterations: usize,
    restarts: usize,
) -> Vec<EigenPairResult> {
    let mut out = Vec::new();
    for (theta, x) in eig.values.iter().zip(&eig.vectors) {
        let (y, ay) = sub.lift(x);
        if norm2(&residual(&y, &ay, *theta)) > threshold {
            break;
        }
        let mut fresh = vec![0.0; y.len()];
        op.apply(&y, &mut fresh);
        let r = norm2(&residual(&y, &fresh, *theta));
        if r > threshold {
            break;
        }
        out.push(EigenPairResult {
            lambda: *theta,
            vector: y,
            residual_norm: r,
            iterations,
            restarts,
        });
    }
    out
}
