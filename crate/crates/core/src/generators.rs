//! Test matrices: the two synthetic diagonal families and the Dirichlet
//! 2D Laplacian.

use std::f64::consts::PI;

use crate::error::{EedError, Result};
use crate::operator::CsrMatrix;

/// Diagonal of the two-cluster synthetic matrix: half the entries are
/// log-spaced in `[5e-6, 0.5]`, the other half in `[0.5 + 5e-6, 1]`.
pub fn example51_diagonal(n: usize) -> Result<Vec<f64>> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(EedError::InvalidConfig(format!(
            "synthetic matrix size must be even and at least 4, got {n}"
        )));
    }
    let half = n / 2;
    let d = |k: usize| 10f64.powf(-5.0 * (1.0 - (k as f64 - 1.0) / (half as f64 - 1.0)));
    Ok((1..=n)
        .map(|k| {
            if k <= half {
                0.5 * d(k)
            } else {
                0.5 * (1.0 + d(k - half))
            }
        })
        .collect())
}

pub fn example51(n: usize) -> Result<CsrMatrix> {
    Ok(CsrMatrix::from_diagonal(&example51_diagonal(n)?))
}

/// The synthetic matrix with every diagonal entry negated.
pub fn example52_flipped(n: usize) -> Result<CsrMatrix> {
    Ok(example51(n)?.negated())
}

/// Negative 5-point Laplacian on an `m x m` interior grid with Dirichlet
/// boundary, `n = m^2`, row-major grid ordering.
pub fn laplacian_2d(m: usize) -> Result<CsrMatrix> {
    if m < 2 {
        return Err(EedError::InvalidConfig(format!(
            "Laplacian grid must be at least 2, got {m}"
        )));
    }
    let n = m * m;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..m {
        for j in 0..m {
            let r = i * m + j;
            t.push((r, r, 4.0));
            if i > 0 {
                t.push((r, r - m, -1.0));
            }
            if i + 1 < m {
                t.push((r, r + m, -1.0));
            }
            if j > 0 {
                t.push((r, r - 1, -1.0));
            }
            if j + 1 < m {
                t.push((r, r + 1, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, &t)
}

/// Closed-form eigenvalues of [`laplacian_2d`], ascending.
pub fn laplacian_2d_eigenvalues(m: usize) -> Vec<f64> {
    let h = PI / (m as f64 + 1.0);
    let c: Vec<f64> = (1..=m).map(|p| 2.0 - 2.0 * (p as f64 * h).cos()).collect();
    let mut ev: Vec<f64> = c
        .iter()
        .flat_map(|a| c.iter().map(move |b| a + b))
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Parse a generator spec `NAME[:ARG]` as used on the command line:
/// `example51[:n]`, `example52[:n]`, `laplacian[:m]`.
pub fn from_spec(spec: &str) -> Result<CsrMatrix> {
    let (name, arg) = match spec.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (spec, None),
    };
    let size = |default: usize| -> Result<usize> {
        arg.map_or(Ok(default), |a| {
            a.parse()
                .map_err(|_| EedError::InvalidConfig(format!("bad generator size '{a}'")))
        })
    };
    match name {
        "example51" => example51(size(500)?),
        "example52" | "example52-flipped" => example52_flipped(size(200)?),
        "laplacian" => laplacian_2d(size(20)?),
        other => Err(EedError::InvalidConfig(format!(
            "unknown generator '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SymmetricOperator;

    #[test]
    fn example51_endpoints() {
        let d = example51_diagonal(500).unwrap();
        assert!((d[0] - 5e-6).abs() < 1e-20);
        assert!((d[249] - 0.5).abs() < 1e-15);
        assert!((d[499] - 1.0).abs() < 1e-15);
        assert!(d.iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn example51_interval_count() {
        let d = example51_diagonal(500).unwrap();
        assert_eq!(d.iter().filter(|&&x| x <= 1e-4).count(), 65);
    }

    #[test]
    fn flipped_count() {
        let a = example52_flipped(200).unwrap();
        let d = a.diagonal();
        assert_eq!(
            d.iter().filter(|&&x| (-1.0..=-0.5001).contains(&x)).count(),
            74
        );
        assert!(d.iter().all(|&x| (-1.0..0.0).contains(&x)));
        let b = example51(200).unwrap().diagonal();
        assert!(d.iter().zip(&b).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn odd_size_rejected() {
        assert!(example51(7).is_err());
        assert!(example52_flipped(9).is_err());
    }

    #[test]
    fn laplacian_small() {
        let ev = laplacian_2d_eigenvalues(2);
        let want = [2.0, 4.0, 4.0, 6.0];
        assert!(ev.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
        let a = laplacian_2d(3).unwrap();
        // Corner row: 4 - 2, edge row: 4 - 3, centre row: 0.
        let sums = a.matvec(&[1.0; 9]).unwrap();
        assert_eq!(sums, vec![2.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn laplacian_spectrum_range() {
        let ev = laplacian_2d_eigenvalues(200);
        assert!(ev[0] > 0.0);
        assert!((ev[ev.len() - 1] - 7.9995).abs() < 5e-5);
        assert_eq!(ev.iter().filter(|&&x| x <= 0.07).count(), 205);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(from_spec("laplacian:4").unwrap().dim(), 16);
        assert_eq!(from_spec("example51").unwrap().dim(), 500);
        assert!(from_spec("nope").is_err());
        assert!(from_spec("laplacian:x").is_err());
    }
}
