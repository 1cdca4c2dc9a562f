//! Dense vector kernels shared by the solvers and diagnostics.
//!
//! Every reduction runs left to right in a fixed order so results are
//! reproducible bit-for-bit for identical inputs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Linear combination `sum_k coeffs[k] * cols[k]`.
pub fn combine(cols: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, col) in coeffs.iter().zip(cols) {
        if *c != 0.0 {
            axpy(*c, col, &mut out);
        }
    }
    out
}

/// Orthogonalize `w` against the orthonormal columns `basis` with two passes
/// of classical Gram-Schmidt. Returns the accumulated projection coefficients.
pub fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let h: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
        for (q, hk) in basis.iter().zip(&h) {
            axpy(-hk, q, w);
        }
        for (c, hk) in coeffs.iter_mut().zip(&h) {
            *c += hk;
        }
    }
    coeffs
}

/// Frobenius norm of `B^T B - I` for a column block.
pub fn orthonormality_defect(cols: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for (i, ci) in cols.iter().enumerate() {
        for (j, cj) in cols.iter().enumerate() {
            let g = dot(ci, cj) - if i == j { 1.0 } else { 0.0 };
            acc += g * g;
        }
    }
    acc.sqrt()
}

/// Seeded uniform random vector on [-1, 1)^n, normalized to unit length.
pub fn random_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = norm2(&v);
    if nrm > 0.0 {
        scale(1.0 / nrm, &mut v);
    }
    v
}

/// Seeded random generator used by generators and tests.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonalize_removes_components() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let mut w = vec![3.0, -2.0, 5.0];
        let c = orthogonalize(&basis, &mut w);
        assert_eq!(c, vec![3.0, -2.0]);
        assert_eq!(w, vec![0.0, 0.0, 5.0]);
    }

    #[test]
    fn random_vectors_are_unit_and_seeded() {
        let a = random_unit_vector(17, 3);
        let b = random_unit_vector(17, 3);
        assert_eq!(a, b);
        assert!((norm2(&a) - 1.0).abs() < 1e-15);
        assert_ne!(a, random_unit_vector(17, 4));
    }
}
