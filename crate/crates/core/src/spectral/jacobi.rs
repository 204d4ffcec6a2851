use super::{SpectralError, JACOBI_TOLERANCE, SWEEPS_PER_DIMENSION};
use crate::tensor::Matrix;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order and the
/// matching eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius mass falls below
/// `JACOBI_TOLERANCE * ||m||_F`, then runs one more sweep; convergence is
/// quadratic so the extra sweep takes the residual to rounding level.
/// Only the upper triangle is read.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen, SpectralError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(SpectralError::ShapeMismatch(format!(
            "symmetric eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(SpectralError::NonFinite);
    }
    let mut a = Matrix::from_fn(n, n, |i, j| if i <= j { m.get(i, j) } else { m.get(j, i) });
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let budget = SWEEPS_PER_DIMENSION * n.max(1);
    let mut polishing = false;
    let mut sweeps = 0;

    if scale > 0.0 {
        loop {
            let off = off_diagonal_norm(&a);
            if off == 0.0 {
                break;
            }
            if off <= JACOBI_TOLERANCE * scale {
                if polishing {
                    break;
                }
                polishing = true;
            }
            if sweeps == budget {
                return Err(SpectralError::NoConvergence {
                    routine: "symmetric Jacobi",
                    sweeps,
                    residual: off / scale,
                });
            }
            sweep(&mut a, &mut v);
            sweeps += 1;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a.get(i, j) * a.get(i, j);
        }
    }
    s.sqrt()
}

fn sweep(a: &mut Matrix, v: &mut Matrix) {
    let n = a.rows();
    for p in 0..n {
        for q in (p + 1)..n {
            let apq = a.get(p, q);
            if apq == 0.0 {
                continue;
            }
            let app = a.get(p, p);
            let aqq = a.get(q, q);
            let theta = (aqq - app) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            a.set(p, p, app - t * apq);
            a.set(q, q, aqq + t * apq);
            a.set(p, q, 0.0);
            a.set(q, p, 0.0);
            for r in 0..n {
                if r == p || r == q {
                    continue;
                }
                let arp = a.get(r, p);
                let arq = a.get(r, q);
                let new_rp = c * arp - s * arq;
                let new_rq = s * arp + c * arq;
                a.set(r, p, new_rp);
                a.set(p, r, new_rp);
                a.set(r, q, new_rq);
                a.set(q, r, new_rq);
            }
            for r in 0..n {
                let vrp = v.get(r, p);
                let vrq = v.get(r, q);
                v.set(r, p, c * vrp - s * vrq);
                v.set(r, q, s * vrp + c * vrq);
            }
        }
    }
}
