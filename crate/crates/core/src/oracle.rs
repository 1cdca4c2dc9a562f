//! Reference computations for testing: dense cyclic Jacobi and inertia
//! counting by symmetric indefinite factorization. None of this shares
//! code with the Lanczos path.

use serde::{Deserialize, Serialize};

use crate::error::{EedError, Result};
use crate::operator::{CsrMatrix, DenseSymMatrix, SymmetricOperator};

/// Default size limit for dense oracle computations.
pub const DENSE_CAP: usize = 2000;

/// Eigenvalue counts of `A - shift I` below, at and above zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub negatives: usize,
    pub zeros: usize,
    pub positives: usize,
}

impl InertiaTriple {
    fn add(&mut self, x: f64, zero_tol: f64) {
        if x.abs() <= zero_tol {
            self.zeros += 1;
        } else if x < 0.0 {
            self.negatives += 1;
        } else {
            self.positives += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

pub fn dense_eig(m: &DenseSymMatrix) -> Result<DenseEigen> {
    dense_eig_with_cap(m, DENSE_CAP)
}

/// Cyclic Jacobi with threshold rotations. Sweeps until the off-diagonal
/// Frobenius norm drops to `n eps ||A||_F`.
pub fn dense_eig_with_cap(m: &DenseSymMatrix, cap: usize) -> Result<DenseEigen> {
    let n = m.dim();
    if n > cap {
        return Err(EedError::CapExceeded { n, cap });
    }
    let mut a = m.values().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let target = n as f64 * f64::EPSILON * m.frobenius_norm();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > target {
        sweeps += 1;
        if sweeps > 100 {
            return Err(EedError::NotConverged {
                restarts: sweeps,
                best_lambda: f64::NAN,
                best_residual: off(&a),
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    Ok(DenseEigen {
        values: order.iter().map(|&k| a[k * n + k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
            .collect(),
    })
}

/// The explicit matrix `A + V diag(shifts) V^T`.
pub fn deflated_dense(a: &DenseSymMatrix, vectors: &[Vec<f64>], shifts: &[f64]) -> DenseSymMatrix {
    a.plus_low_rank(vectors, shifts)
}

fn zero_tol(anorm: f64) -> f64 {
    1e3 * f64::EPSILON * anorm
}

fn inf_norm_dense(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inertia of `A - shift I` via Bunch-Kaufman `L D L^T`. Pivots within
/// `1e3 eps ||A||` of zero count as zero eigenvalues.
pub fn inertia_dense(m: &DenseSymMatrix, shift: f64) -> Result<InertiaTriple> {
    let n = m.dim();
    let anorm = inf_norm_dense(m.values(), n);
    let mut a = m.values().to_vec();
    for i in 0..n {
        a[i * n + i] -= shift;
    }
    Ok(bunch_kaufman_inertia(&mut a, n, zero_tol(anorm)))
}

fn bunch_kaufman_inertia(a: &mut [f64], n: usize, ztol: f64) -> InertiaTriple {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut out = InertiaTriple {
        negatives: 0,
        zeros: 0,
        positives: 0,
    };
    let swap = |a: &mut [f64], i: usize, j: usize| {
        if i == j {
            return;
        }
        for k in 0..n {
            a.swap(i * n + k, j * n + k);
        }
        for k in 0..n {
            a.swap(k * n + i, k * n + j);
        }
    };
    let mut k = 0;
    while k < n {
        let akk = a[k * n + k].abs();
        let (mut r, mut colmax) = (k, 0.0);
        for i in (k + 1)..n {
            if a[i * n + k].abs() > colmax {
                colmax = a[i * n + k].abs();
                r = i;
            }
        }
        let two = if akk.max(colmax) == 0.0 || akk >= alpha * colmax {
            false
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != r)
                .map(|j| a[r * n + j].abs())
                .fold(0.0, f64::max);
            if akk * rowmax >= alpha * colmax * colmax {
                false
            } else if a[r * n + r].abs() >= alpha * rowmax {
                swap(a, k, r);
                false
            } else {
                swap(a, k + 1, r);
                true
            }
        };
        if !two {
            let d = a[k * n + k];
            out.add(d, ztol);
            if d != 0.0 {
                for i in (k + 1)..n {
                    let l = a[i * n + k] / d;
                    if l != 0.0 {
                        for j in (k + 1)..n {
                            a[i * n + j] -= l * a[k * n + j];
                        }
                    }
                }
            }
            k += 1;
        } else {
            let (d11, d21, d22) = (a[k * n + k], a[(k + 1) * n + k], a[(k + 1) * n + k + 1]);
            let det = d11 * d22 - d21 * d21;
            let tr = d11 + d22;
            let disc = ((d11 - d22) * (d11 - d22) / 4.0 + d21 * d21).sqrt();
            out.add(tr / 2.0 - disc, ztol);
            out.add(tr / 2.0 + disc, ztol);
            for i in (k + 2)..n {
                let (c1, c2) = (a[i * n + k], a[i * n + k + 1]);
                // [l1 l2] = [c1 c2] D^{-1}
                let l1 = (c1 * d22 - c2 * d21) / det;
                let l2 = (c2 * d11 - c1 * d21) / det;
                for j in (k + 2)..n {
                    a[i * n + j] -= l1 * a[k * n + j] + l2 * a[(k + 1) * n + j];
                }
            }
            k += 2;
        }
    }
    out
}

/// Inertia of `A - shift I` for a sparse matrix. Dense Bunch-Kaufman up to
/// [`DENSE_CAP`]; beyond that an unpivoted banded `L D L^T`, which is
/// adequate for the narrow-band test matrices it is used on.
pub fn inertia_csr(m: &CsrMatrix, shift: f64) -> Result<InertiaTriple> {
    let n = m.dim();
    if n <= DENSE_CAP {
        return inertia_dense(&m.to_dense(), shift);
    }
    banded_inertia(m, shift)
}

fn banded_inertia(m: &CsrMatrix, shift: f64) -> Result<InertiaTriple> {
    let n = m.dim();
    let b = m.bandwidth();
    let anorm = (0..n)
        .map(|r| m.row(r).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let ztol = zero_tol(anorm);
    let w = b + 1;
    // band[i * w + d] holds A[i + d][i] (lower band, column-major by i).
    let mut band = vec![0.0; n * w];
    for r in 0..n {
        for (c, v) in m.row(r) {
            if c <= r {
                band[c * w + (r - c)] = v;
            }
        }
        band[r * w] -= shift;
    }
    let mut out = InertiaTriple {
        negatives: 0,
        zeros: 0,
        positives: 0,
    };
    for k in 0..n {
        let d = band[k * w];
        if d.abs() <= f64::EPSILON * anorm {
            return Err(EedError::Breakdown { index: k });
        }
        out.add(d, ztol);
        let last = (k + b).min(n - 1);
        for i in (k + 1)..=last {
            let lik = band[k * w + (i - k)] / d;
            if lik == 0.0 {
                continue;
            }
            for j in i..=last {
                band[i * w + (j - i)] -= lik * band[k * w + (j - k)];
            }
        }
    }
    Ok(out)
}

/// Inertia with a dense-eigenvalue fallback if factorization breaks down.
pub fn inertia(m: &CsrMatrix, shift: f64) -> Result<InertiaTriple> {
    match inertia_csr(m, shift) {
        Err(EedError::Breakdown { .. }) if m.dim() <= DENSE_CAP => {
            let eig = dense_eig(&m.to_dense())?;
            let anorm = eig.values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let mut out = InertiaTriple {
                negatives: 0,
                zeros: 0,
                positives: 0,
            };
            for x in eig.values {
                out.add(x - shift, zero_tol(anorm));
            }
            Ok(out)
        }
        other => other,
    }
}

/// Number of eigenvalues in the closed interval `[lo, hi]`.
pub fn eigencount_in_interval(m: &CsrMatrix, lo: f64, hi: f64) -> Result<usize> {
    if !(lo < hi) {
        return Err(EedError::InvalidConfig(format!(
            "empty interval [{lo}, {hi}]"
        )));
    }
    let upper = inertia(m, hi)?;
    let lower = inertia(m, lo)?;
    Ok((upper.negatives + upper.zeros).saturating_sub(lower.negatives))
}
