//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Dense, dependency-free, and accurate to near machine precision, which is
//! all spectral clustering at a few thousand samples needs. Eigenvalues come
//! back sorted ascending with matching orthonormal eigenvector columns.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Sweep cap before the solver reports non-convergence. Well-conditioned
/// symmetric matrices converge in well under 20 sweeps.
const MAX_SWEEPS: usize = 100;

/// Relative off-diagonal Frobenius tolerance for convergence.
const OFF_DIAG_TOL: f64 = 1e-12;

/// Allowed asymmetry |a_ij - a_ji| relative to the largest entry.
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix: `m = V diag(vals) V^T`.
///
/// The input must be square and symmetric to within `1e-10` (it is
/// symmetrized internally before iteration). Returns eigenvalues ascending
/// and the matrix whose columns are the corresponding eigenvectors, each
/// sign-normalized so its largest-magnitude entry is positive.
pub fn sym_eig(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }

    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {:e}",
                    (m.get(i, j) - m.get(j, i)).abs()
                )));
            }
        }
    }

    // Work on the symmetrized copy so the iteration sees an exactly
    // symmetric matrix.
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
        }
    }
    let norm = a.frob_norm();
    let mut v = Matrix::identity(n);

    if norm > 0.0 {
        let mut converged = false;
        for _sweep in 0..MAX_SWEEPS {
            if off_diag_norm(&a) <= OFF_DIAG_TOL * norm {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diag_norm(&a) > OFF_DIAG_TOL * norm {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }

    // Sort ascending; reorder eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap().then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        // Sign convention: largest-magnitude entry positive (lowest index on ties).
        let mut best = 0;
        for i in 1..n {
            if v.get(i, old_col).abs() > v.get(best, old_col).abs() {
                best = i;
            }
        }
        let flip = if v.get(best, old_col) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors.set(i, new_col, flip * v.get(i, old_col));
        }
    }

    Ok((values, vectors))
}

fn off_diag_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                let v = a.get(p, q);
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating a[p][q], accumulated into v.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    // t = sgn(theta) / (|theta| + sqrt(theta^2 + 1)), guarded against overflow.
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let s = if theta >= 0.0 { 1.0 } else { -1.0 };
        s / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // A <- J^T A J applied as a column update followed by a row update.
    for j in 0..n {
        let ajp = a.get(j, p);
        let ajq = a.get(j, q);
        a.set(j, p, c * ajp - s * ajq);
        a.set(j, q, s * ajp + c * ajq);
    }
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, c * apj - s * aqj);
        a.set(q, j, s * apj + c * aqj);
    }
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);

    for j in 0..n {
        let vjp = v.get(j, p);
        let vjq = v.get(j, q);
        v.set(j, p, c * vjp - s * vjq);
        v.set(j, q, s * vjp + c * vjq);
    }
}
