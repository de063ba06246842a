//! Symmetric eigensolvers.
//!
//! Cyclic Jacobi for the small dense matrices of the rank-one oracle, a
//! Householder/QR dense path for lattice Hamiltonians, and Sturm-sequence
//! bisection with inverse iteration for long tridiagonal chains.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues in ascending order with unit eigenvectors stored column-wise
/// (`vectors[k]` belongs to `values[k]`).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations on a dense symmetric matrix in row-major order.
/// Rotations sweep the upper triangle row by row, always in the same order.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<Eigen> {
    if matrix.len() != n * n {
        return Err(Error::Argument(format!("matrix has {} entries, expected {}", matrix.len(), n * n)));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
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
    if !converged {
        return Err(Error::Numeric(format!("Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (n = {n})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    Ok(Eigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|i| v[i * n + k]).collect()).collect(),
    })
}

/// Dense symmetric eigendecomposition (Householder tridiagonalization and
/// implicit QR).
pub fn dense_eigen(matrix: DMatrix<f64>) -> Result<Eigen> {
    let n = matrix.nrows();
    let eig = matrix
        .try_symmetric_eigen(f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    Ok(Eigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect(),
    })
}

/// Eigenvalues only, ascending.
pub fn dense_eigenvalues(matrix: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `d` and off-diagonal `e`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..d.len() {
        let coupling = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    (0..n)
        .map(|k| {
            // smallest x with count(x) > k
            let (mut a, mut b) = (lo - pad, hi + pad);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(d, e, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Unit eigenvector of a symmetric tridiagonal matrix for an accurate
/// eigenvalue estimate, by three steps of inverse iteration.
pub fn tridiagonal_eigenvector(d: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    let n = d.len();
    let shift = lambda + 1e-13 * (1.0 + lambda.abs());
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..3 {
        x = solve_tridiagonal(d, e, shift, &x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

/// Solves `(T - shift) y = rhs` with partial pivoting.
fn solve_tridiagonal(d: &[f64], e: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = d.len();
    if n == 1 {
        let p = d[0] - shift;
        return vec![rhs[0] / if p == 0.0 { f64::MIN_POSITIVE } else { p }];
    }
    // LU with partial pivoting: rows have up to three upper entries.
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut y = rhs.to_vec();
    let mut diag = d[0] - shift;
    let mut upper = e[0];
    for i in 0..n - 1 {
        let sub = e[i];
        let next_diag = d[i + 1] - shift;
        let next_upper = if i + 1 < n - 1 { e[i + 1] } else { 0.0 };
        if diag.abs() >= sub.abs() {
            let diag_safe = if diag == 0.0 { f64::EPSILON } else { diag };
            let m = sub / diag_safe;
            u0[i] = diag_safe;
            u1[i] = upper;
            u2[i] = 0.0;
            diag = next_diag - m * upper;
            upper = next_upper;
            y[i + 1] -= m * y[i];
        } else {
            let m = diag / sub;
            u0[i] = sub;
            u1[i] = next_diag;
            u2[i] = next_upper;
            diag = upper - m * next_diag;
            upper = -m * next_upper;
            y.swap(i, i + 1);
            y[i + 1] -= m * y[i];
        }
    }
    u0[n - 1] = if diag == 0.0 { f64::EPSILON } else { diag };
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    x
}
