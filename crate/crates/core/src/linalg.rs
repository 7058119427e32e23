//! Dense real symmetric linear algebra: a cyclic Jacobi eigensolver and a
//! rank-revealing pivoted Cholesky factorization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative convergence threshold on the off-diagonal Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = Q diag(values) Q^T`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    /// Rebuilds `Q diag(values) Q^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.values.clone().into());
        scaled * self.vectors.transpose()
    }
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn check_symmetric(a: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let asym = asymmetry(a);
    if asym > rel_tol * scale || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    symmetric_eigen_with(a, JACOBI_TOL, true)
}

/// Eigenvalues only (ascending); skips accumulating the rotations.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(symmetric_eigen_with(a, JACOBI_TOL, false)?.values)
}

/// Cyclic Jacobi with convergence when `||offdiag(A)||_F < tol * ||A||_F`.
///
/// With `want_vectors == false` the returned `vectors` matrix is empty.
pub fn symmetric_eigen_with(
    a: &DMatrix<f64>,
    tol: f64,
    want_vectors: bool,
) -> Result<SymmetricEigen> {
    check_symmetric(a, 1e-12)?;
    let n = a.nrows();

    // Row-major working copy, symmetrized. `vt` holds eigenvectors as rows.
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut vt = if want_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    } else {
        Vec::new()
    };

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tol * frob;
    let mut sweeps = 0;

    loop {
        let off = off_diagonal_norm(&m, n);
        if off <= target || n < 2 {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        // Rotations on entries far below the convergence target cannot matter.
        // The first sweeps also skip entries well below the current average.
        let mut skip = target / (n as f64);
        if sweeps <= 3 {
            skip = skip.max(0.2 * off / (n * n) as f64);
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                {
                    let (lo, hi) = m.split_at_mut(q * n);
                    let rp = &mut lo[p * n..(p + 1) * n];
                    let rq = &mut hi[..n];
                    for (xp, xq) in rp.iter_mut().zip(rq.iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                    rp[p] = app - t * apq;
                    rq[q] = aqq + t * apq;
                    rp[q] = 0.0;
                    rq[p] = 0.0;
                }
                for k in 0..n {
                    m[k * n + p] = m[p * n + k];
                    m[k * n + q] = m[q * n + k];
                }

                if want_vectors {
                    let (lo, hi) = vt.split_at_mut(q * n);
                    let vp = &mut lo[p * n..(p + 1) * n];
                    let vq = &mut hi[..n];
                    for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = if want_vectors {
        DMatrix::from_fn(n, n, |row, col| vt[order[col] * n + row])
    } else {
        DMatrix::zeros(0, 0)
    };
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[i * n + j] * m[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Outer-product pivoted Cholesky `A ~ F^T F` of a PSD matrix.
///
/// Returns `F` with `r` rows, stopping once every remaining residual diagonal
/// entry is at most `stop`. The residual `A - F^T F` is PSD with trace at most
/// `n * stop` (in exact arithmetic).
pub fn pivoted_cholesky(a: &DMatrix<f64>, stop: f64) -> Result<DMatrix<f64>> {
    check_symmetric(a, 1e-12)?;
    let n = a.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];

    while rows.len() < n {
        let (pivot, &dmax) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("at least one unused column");
        if dmax <= stop {
            break;
        }
        used[pivot] = true;
        let scale = dmax.sqrt();
        let mut row: Vec<f64> = (0..n).map(|i| a[(i, pivot)]).collect();
        for prev in &rows {
            let fp = prev[pivot];
            if fp != 0.0 {
                for (x, f) in row.iter_mut().zip(prev) {
                    *x -= f * fp;
                }
            }
        }
        for (i, x) in row.iter_mut().enumerate() {
            if used[i] && i != pivot {
                *x = 0.0;
            } else {
                *x /= scale;
            }
        }
        row[pivot] = scale;
        for (d, x) in diag.iter_mut().zip(&row) {
            *d -= x * x;
        }
        diag[pivot] = 0.0;
        rows.push(row);
    }

    let r = rows.len();
    Ok(DMatrix::from_fn(r, n, |i, j| rows[i][j]))
}
