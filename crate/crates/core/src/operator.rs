//! Symmetric operators: sparse CSR, dense, and the operator-norm estimate.

use serde::{Deserialize, Serialize};

use crate::error::{EedError, Result};
use crate::linalg::{axpy, dot, norm2, orthogonalize, random_unit_vector, scale};
use crate::tridiagonal::tridiagonal_eigen;

/// A real symmetric linear map.
///
/// Implementations must be deterministic: the same input produces the same
/// output bit-for-bit.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y = A x`. Callers guarantee `x.len() == y.len() == self.dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(EedError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Compressed sparse row matrix holding the full symmetric pattern
/// (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets. Entries are sorted by
    /// column within each row; duplicate coordinates are rejected.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(EedError::InvalidConfig(format!(
                    "entry ({r}, {c}) outside a {n}x{n} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }
        for r in 0..n {
            let row = &mut entries[row_offsets[r]..row_offsets[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(EedError::InvalidConfig(format!(
                    "duplicate entry ({r}, {})",
                    w[0].0
                )));
            }
        }
        let (col_indices, values) = entries.into_iter().unzip();
        Ok(CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate `(col, value)` over row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Entry `(r, c)`, zero when structurally absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// Entry-wise negation.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = -*v;
        }
        out
    }

    pub fn to_dense(&self) -> DenseSymMatrix {
        let mut values = vec![0.0; self.n * self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                values[r * self.n + c] = v;
            }
        }
        DenseSymMatrix { n: self.n, values }
    }

    /// Frobenius norm of the stored values.
    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yr = acc;
        }
    }
}

/// `true` iff `max |a_ij - a_ji| <= tol_sym` over the stored pattern.
pub fn check_symmetry(m: &CsrMatrix, tol_sym: f64) -> bool {
    (0..m.n).all(|r| m.row(r).all(|(c, v)| (v - m.get(c, r)).abs() <= tol_sym))
}

/// Dense symmetric matrix, row-major storage of all `n * n` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DenseSymMatrix {
    /// Rejects input that is not exactly symmetric.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(EedError::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(EedError::InvalidConfig(format!(
                        "dense matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DenseSymMatrix { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 }).expect("identity is symmetric")
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `A + sum_k sigma_k v_k v_k^T`, formed explicitly.
    pub fn plus_low_rank(&self, vectors: &[Vec<f64>], shifts: &[f64]) -> Self {
        let n = self.n;
        let mut values = self.values.clone();
        for (v, s) in vectors.iter().zip(shifts) {
            for i in 0..n {
                for j in 0..n {
                    values[i * n + j] += s * v[i] * v[j];
                }
            }
        }
        // Symmetrize exactly; the two triangles see the same products.
        for i in 0..n {
            for j in 0..i {
                values[j * n + i] = values[i * n + j];
            }
        }
        DenseSymMatrix { n, values }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }
}

impl SymmetricOperator for DenseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.values[i * self.n..(i + 1) * self.n], x);
        }
    }
}

/// Identity operator of a given dimension.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl SymmetricOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    LanczosEstimate,
    ExactDense,
    UserSupplied,
}

/// Working estimate of `||A||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    /// Set when the estimate is zero (the operator annihilated the start vector).
    pub degenerate: bool,
}

impl NormEstimate {
    pub fn user_supplied(value: f64) -> Self {
        NormEstimate {
            value,
            method: NormMethod::UserSupplied,
            degenerate: value == 0.0,
        }
    }
}

/// Default iteration count for [`estimate_two_norm`].
pub const NORM_ESTIMATE_ITERS: usize = 30;

/// Estimate `||A||_2` as the largest Ritz value magnitude of a short
/// Lanczos run (full reorthogonalization) from a seeded random vector.
///
/// Ritz values lie inside the spectrum, so the estimate never exceeds the
/// true norm beyond rounding.
pub fn estimate_two_norm(
    op: &dyn SymmetricOperator,
    seed: u64,
    iters: usize,
) -> Result<NormEstimate> {
    if iters == 0 {
        return Err(EedError::InvalidConfig("iters must be at least 1".into()));
    }
    let n = op.dim();
    if n == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            method: NormMethod::LanczosEstimate,
            degenerate: true,
        });
    }
    let steps = iters.min(n);
    let mut basis = vec![random_unit_vector(n, seed)];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    for k in 0..steps {
        op.apply(&basis[k], &mut w);
        let a = dot(&basis[k], &w);
        alpha.push(a);
        axpy(-a, &basis[k], &mut w);
        if k > 0 {
            axpy(-beta[k - 1], &basis[k - 1], &mut w);
        }
        orthogonalize(&basis, &mut w);
        let b = norm2(&w);
        if k + 1 == steps || b <= f64::EPSILON * (a.abs() + beta.last().copied().unwrap_or(0.0)) {
            break;
        }
        beta.push(b);
        let mut q = w.clone();
        scale(1.0 / b, &mut q);
        basis.push(q);
    }
    let off = &beta[..alpha.len() - 1];
    let eig = tridiagonal_eigen(&alpha, off)?;
    let value = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(NormEstimate {
        value,
        method: NormMethod::LanczosEstimate,
        degenerate: value == 0.0,
    })
}
