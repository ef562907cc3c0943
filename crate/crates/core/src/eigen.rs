//! Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices.
//!
//! The matrices here are 2x2 up to a few dozen rows (pseudo-inertias, spatial
//! inertia blocks, mass matrices, Gram matrices of stacked Jacobians), so a
//! plain Jacobi sweep is accurate and fast enough, with no dependencies.

use crate::linalg::DMatrix;
use crate::{Error, Result};

const SWEEP_LIMIT: usize = 100;
const OFF_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix, ascending. Also returns the accumulated
/// rotation V with `A = V diag(w) V^T`.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let defect = a.symmetry_defect();
    let scale = a.norm_inf().max(1.0);
    if defect > 1e-9 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix not symmetric (defect {defect:.2e})"
        )));
    }
    let mut m = a.clone();
    // enforce exact symmetry so the sweeps preserve it
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = DMatrix::identity(n);
    let tol = OFF_TOL * scale;

    for _sweep in 0..SWEEP_LIMIT {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            let mut w: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
            // sort eigenvalues ascending and permute V accordingly
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let v_sorted = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
            return Ok((w, v_sorted));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NumericFailure(format!(
        "jacobi eigensolver did not converge in {SWEEP_LIMIT} sweeps (n = {n})"
    )))
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(sym_eigen(a)?.0)
}

pub fn lambda_min(a: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(a)?[0])
}

pub fn lambda_max(a: &DMatrix<f64>) -> Result<f64> {
    Ok(*sym_eigenvalues(a)?.last().unwrap())
}

/// Largest singular value, through the Gram matrix of the smaller side.
pub fn sigma_max(b: &DMatrix<f64>) -> Result<f64> {
    let gram = if b.nrows() <= b.ncols() {
        b.matmul(&b.transpose())
    } else {
        b.transpose().matmul(b)
    };
    Ok(lambda_max(&gram)?.max(0.0).sqrt())
}
