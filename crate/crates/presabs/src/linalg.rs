//! Small dense symmetric linear algebra: cyclic Jacobi eigendecomposition and
//! Cholesky factorization.
//!
//! Matrices are flat row-major `&[f64]` slices. Problem sizes here are a few
//! hundred at most, where the Jacobi method is robust, accurate to working
//! precision, and more than fast enough.

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric n x n matrix by the cyclic Jacobi method.
///
/// Returns `(values, vectors)` with eigenvalues sorted in descending order;
/// `vectors[i * n + k]` is component `i` of the eigenvector for `values[k]`.
/// Sweeps run until the off-diagonal Frobenius norm falls below 1e-10 relative
/// to the matrix norm.
///
/// # Panics
///
/// Panics if `matrix.len() != n * n`.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n < 2 {
        return (a, v);
    }

    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![0.0; n], v);
    }
    let tol = 1e-10 * norm;

    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        // Threshold first sweeps so tiny pivots do not stall early progress.
        let thresh = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq * apq <= thresh {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Skip rotations that cannot change the diagonal at working
                // precision; this is what terminates the final sweeps.
                if apq.abs() <= f64::EPSILON * (app.abs() + aqq.abs()) * 0.5 {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let mut values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    values = order.iter().map(|&i| values[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    (values, vectors)
}

/// Lower-triangular Cholesky factor L with A = L L^T, stored row-major with
/// zeros above the diagonal.
///
/// # Errors
///
/// [`Error::Numerical`] when the matrix is not positive definite.
pub fn cholesky(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Numerical("matrix not positive definite".into()));
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves L y = b for lower-triangular L by forward substitution.
pub fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(values: &[f64], vectors: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[i * n + j] += values[k] * vectors[i * n + k] * vectors[j * n + k];
                }
            }
        }
        out
    }

    #[test]
    fn eigen_recovers_diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        let (values, _) = symmetric_eigen(&a, 3);
        assert_eq!(values, vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn eigen_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let (values, vectors) = symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((values[0] - 3.0).abs() < 1e-12);
        assert!((values[1] - 1.0).abs() < 1e-12);
        // eigenvector for 3 is (1,1)/sqrt(2) up to sign
        assert!((vectors[0].abs() - (0.5f64).sqrt()).abs() < 1e-12);
        assert!((vectors[0] - vectors[2]).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        // fixed pseudo-random symmetric matrix
        let n = 8;
        let mut a = vec![0.0; n * n];
        let mut x = 0.37f64;
        for i in 0..n {
            for j in 0..=i {
                x = (x * 997.0 + 0.123).fract();
                let v = 2.0 * x - 1.0;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let (values, vectors) = symmetric_eigen(&a, n);
        let b = reconstruct(&values, &vectors, n);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "reconstruction mismatch: {x} vs {y}");
        }
        // descending order
        for w in values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        // orthonormal columns
        for k in 0..n {
            for l in k..n {
                let dot: f64 = (0..n).map(|i| vectors[i * n + k] * vectors[i * n + l]).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_roundtrip_and_solve() {
        // A = L0 L0^T with L0 = [[2,0],[1,3]] gives [[4,2],[2,10]].
        let a = [4.0, 2.0, 2.0, 10.0];
        let l = cholesky(&a, 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-14);
        assert!((l[2] - 1.0).abs() < 1e-14);
        assert!((l[3] - 3.0).abs() < 1e-14);
        let y = forward_substitute(&l, 2, &[2.0, 7.0]);
        assert!((y[0] - 1.0).abs() < 1e-14);
        assert!((y[1] - 2.0).abs() < 1e-14);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err(), "indefinite must fail");
    }
}
