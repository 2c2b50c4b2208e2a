//! Small dense symmetric linear algebra.
//!
//! Matrices are square, row-major `&[f64]` slices of length `n * n`. The
//! sizes that occur here are tiny (a pencil block, or the Gram matrix of one
//! least-squares step), so cyclic Jacobi is used for eigenproblems: it is
//! simple, backward stable and accurate to a few ulps on small inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{hypot, sqrt};

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, in the order Jacobi left them on the diagonal (unsorted).
    pub values: Vec<f64>,
    /// Row-major `n × n`; column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<f64>,
}

impl SymEigen {
    /// Column `j` of the eigenvector matrix.
    pub fn vector(&self, j: usize) -> Vec<f64> {
        let n = self.values.len();
        (0..n).map(|r| self.vectors[r * n + j]).collect()
    }
}

/// Returned when Jacobi sweeps fail to annihilate the off-diagonal part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotConverged;

/// Cyclic Jacobi eigen-decomposition of the symmetric matrix `a` (`n × n`).
///
/// Only the upper triangle is trusted; the input is symmetrized on entry.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<SymEigen, NotConverged> {
    debug_assert_eq!(a.len(), n * n);
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            w[i * n + j] = a[i * n + j];
            w[j * n + i] = a[i * n + j];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Ok(SymEigen { values: w, vectors: v });
    }

    let total: f64 = w.iter().map(|x| x * x).sum();
    if total == 0.0 {
        let values = (0..n).map(|i| w[i * n + i]).collect();
        return Ok(SymEigen { values, vectors: v });
    }
    if !total.is_finite() {
        return Err(NotConverged);
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[p * n + q] * w[p * n + q];
            }
        }
        if off == 0.0 || off <= 1e-32 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + hypot(theta, 1.0));
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut w, n, p, q, c, s);
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(NotConverged);
    }
    let values = (0..n).map(|i| w[i * n + i]).collect();
    Ok(SymEigen { values, vectors: v })
}

// w <- Jᵀ w J for the plane rotation J acting on (p, q).
fn rotate(w: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..n {
        let wrp = w[r * n + p];
        let wrq = w[r * n + q];
        w[r * n + p] = c * wrp - s * wrq;
        w[r * n + q] = s * wrp + c * wrq;
    }
    for col in 0..n {
        let wpc = w[p * n + col];
        let wqc = w[q * n + col];
        w[p * n + col] = c * wpc - s * wqc;
        w[q * n + col] = s * wpc + c * wqc;
    }
}

/// Cholesky factorization `a = L Lᵀ`, returning `L` row-major.
///
/// Fails when a pivot drops below `rel_pivot` times the largest diagonal
/// entry, which is how callers detect numerically singular Gram matrices.
pub fn cholesky(a: &[f64], n: usize, rel_pivot: f64) -> Option<Vec<f64>> {
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) {
        return if n == 0 { Some(Vec::new()) } else { None };
    }
    let floor = rel_pivot * max_diag;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for t in 0..j {
            d -= l[j * n + t] * l[j * n + t];
        }
        if !(d > floor) {
            return None;
        }
        let djj = sqrt(d);
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for t in 0..j {
                s -= l[i * n + t] * l[j * n + t];
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for t in 0..i {
            s -= l[i * n + t] * z[t];
        }
        z[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for t in (i + 1)..n {
            s -= l[t * n + i] * z[t];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// Minimum-norm solution of the symmetric positive semidefinite system
/// `g x = b` in the least-squares sense.
///
/// Coordinates whose diagonal is exactly zero carry no information and are
/// pinned to zero. The remaining system is factored by Cholesky; if that is
/// numerically singular the pseudo-inverse built from a Jacobi
/// eigen-decomposition is used instead, discarding eigenvalues below
/// `1e-12 · λ_max`.
pub fn psd_min_norm_solve(g: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>, NotConverged> {
    let active: Vec<usize> = (0..n).filter(|&i| g[i * n + i] != 0.0).collect();
    let r = active.len();
    let mut x = vec![0.0; n];
    if r == 0 {
        return Ok(x);
    }
    let mut sub = vec![0.0; r * r];
    let mut rhs = vec![0.0; r];
    for (a, &i) in active.iter().enumerate() {
        rhs[a] = b[i];
        for (c, &j) in active.iter().enumerate() {
            sub[a * r + c] = g[i * n + j];
        }
    }

    let solved = match cholesky(&sub, r, 1e-11) {
        Some(l) => cholesky_solve(&l, r, &rhs),
        None => pinv_solve(&sub, r, &rhs)?,
    };
    for (a, &i) in active.iter().enumerate() {
        x[i] = solved[a];
    }
    Ok(x)
}

fn pinv_solve(g: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>, NotConverged> {
    let eig = sym_eigen(g, n)?;
    let lmax = eig.values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = 1e-12 * lmax;
    let mut x = vec![0.0; n];
    for j in 0..n {
        let lam = eig.values[j];
        if !(lam > cutoff) {
            continue;
        }
        let mut proj = 0.0;
        for r in 0..n {
            proj += eig.vectors[r * n + j] * b[r];
        }
        let coef = proj / lam;
        for r in 0..n {
            x[r] += coef * eig.vectors[r * n + j];
        }
    }
    Ok(x)
}
