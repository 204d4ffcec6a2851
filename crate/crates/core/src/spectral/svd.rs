use super::{SpectralError, SWEEPS_PER_DIMENSION};
use crate::tensor::Matrix;

/// Thin singular value decomposition `m = u diag(s) v^T`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `rows x r`, orthonormal columns.
    pub u: Matrix,
    /// Descending, nonnegative, length `r`.
    pub singular_values: Vec<f64>,
    /// `cols x r`, orthonormal columns.
    pub v: Matrix,
}

/// Output of the one-sided (Hestenes) Jacobi iteration on a set of vectors.
struct Orthogonalized {
    /// Mutually orthogonal vectors `W = B V`.
    columns: Vec<Vec<f64>>,
    /// Accumulated rotation, square and orthogonal.
    rotation: Matrix,
}

/// Rotates the columns `b` until they are mutually orthogonal.
///
/// Pairs are rotated when `|<w_p, w_q>| > tol * |w_p| |w_q|`; the iteration
/// stops after a sweep with no rotation. Columns whose squared norm is at
/// rounding level relative to the whole matrix are treated as null and
/// not rotated against.
fn hestenes(mut columns: Vec<Vec<f64>>) -> Result<Orthogonalized, SpectralError> {
    let n = columns.len();
    let len = columns.first().map_or(0, Vec::len);
    let mut rotation = Matrix::identity(n);
    let total: f64 = columns.iter().flat_map(|c| c.iter()).map(|x| x * x).sum();
    if !total.is_finite() {
        return Err(SpectralError::NonFinite);
    }
    let floor = (f64::EPSILON * f64::EPSILON) * total;
    let tol = f64::EPSILON * (len.max(n).max(1) as f64);
    let budget = SWEEPS_PER_DIMENSION * len.max(n).max(1);
    let mut norms: Vec<f64> = columns.iter().map(|c| dot(c, c)).collect();

    for _ in 0..budget {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(&columns[p], &columns[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = columns.split_at_mut(q);
                let (wp, wq) = (&mut left[p], &mut right[0]);
                for (x, y) in wp.iter_mut().zip(wq.iter_mut()) {
                    let a = *x;
                    let b = *y;
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                norms[p] = dot(wp, wp);
                norms[q] = dot(wq, wq);
                for r in 0..n {
                    let a = rotation.get(r, p);
                    let b = rotation.get(r, q);
                    rotation.set(r, p, c * a - s * b);
                    rotation.set(r, q, s * a + c * b);
                }
            }
        }
        if !rotated {
            return Ok(Orthogonalized { columns, rotation });
        }
    }
    // report the worst remaining normalized correlation
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            if norms[p] > floor && norms[q] > floor {
                let g = dot(&columns[p], &columns[q]).abs() / (norms[p] * norms[q]).sqrt();
                worst = worst.max(g);
            }
        }
    }
    Err(SpectralError::NoConvergence {
        routine: "one-sided Jacobi SVD",
        sweeps: budget,
        residual: worst,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorted order of column norms, descending, ties by index.
fn descending_order(norms: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    order
}

type LeftBasis = (Vec<f64>, Matrix, Vec<Vec<f64>>);

/// Left-side decomposition: rotates the rows of `m` so the accumulated
/// rotation is a complete orthogonal basis of left singular vectors.
fn left_basis(m: &Matrix) -> Result<LeftBasis, SpectralError> {
    let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    let Orthogonalized { columns, rotation } = hestenes(rows)?;
    let norms: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();
    let order = descending_order(&norms);
    let sigma = order.iter().map(|&i| norms[i]).collect();
    let basis = Matrix::from_fn(m.rows(), m.rows(), |r, c| rotation.get(r, order[c]));
    let sorted = order.into_iter().map(|i| columns[i].clone()).collect();
    Ok((sigma, basis, sorted))
}

/// Top-`r` left singular vectors of `m` as orthonormal columns.
///
/// Deterministic for a given input. For a symmetric positive semidefinite
/// matrix this spans the top-`r` eigenvector subspace.
pub fn top_left_singular_vectors(m: &Matrix, r: usize) -> Result<Matrix, SpectralError> {
    let max = m.rows().min(m.cols());
    if r == 0 || r > max {
        return Err(SpectralError::RankOutOfRange { requested: r, max });
    }
    let (_, basis, _) = left_basis(m)?;
    Ok(basis.leading_columns(r))
}

/// Thin SVD with `r = min(rows, cols)`.
pub fn svd(m: &Matrix) -> Result<SvdResult, SpectralError> {
    if m.rows() < m.cols() {
        let t = svd(&m.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    // rows >= cols: the left basis of m^T is the right basis of m
    let mt = m.transpose();
    let (sigma, v_full, w) = left_basis(&mt)?;
    let r = m.cols();
    let v = v_full.leading_columns(r);
    // u_j = w_j / sigma_j, completed where sigma_j vanishes
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    let scale = sigma.first().copied().unwrap_or(0.0);
    for (j, wj) in w.iter().enumerate().take(r) {
        if sigma[j] > f64::EPSILON * scale && sigma[j] > 0.0 {
            u_cols.push(wj.iter().map(|x| x / sigma[j]).collect());
        } else {
            u_cols.push(complete_basis(&u_cols, m.rows()));
        }
    }
    let u = Matrix::from_fn(m.rows(), r, |i, j| u_cols[j][i]);
    Ok(SvdResult {
        u,
        singular_values: sigma,
        v,
    })
}

/// A unit vector orthogonal to `existing`, taken from the standard basis.
fn complete_basis(existing: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best = vec![0.0; dim];
    let mut best_norm = -1.0;
    for e in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[e] = 1.0;
        for _ in 0..2 {
            for q in existing {
                let proj = dot(&cand, q);
                for (c, x) in cand.iter_mut().zip(q) {
                    *c -= proj * x;
                }
            }
        }
        let norm = dot(&cand, &cand).sqrt();
        if norm > best_norm {
            best_norm = norm;
            best = cand;
        }
        if norm > 0.5 {
            break;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64, SpectralError> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    Ok(svd(m)?.singular_values[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        Matrix::from_fn(rows, cols, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    fn check_reconstruction(m: &Matrix) {
        let s = svd(m).unwrap();
        assert!(s.u.orthonormality_error() < 1e-12);
        assert!(s.v.orthonormality_error() < 1e-12);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let r = s.singular_values.len();
        let sig = Matrix::from_fn(r, r, |i, j| if i == j { s.singular_values[i] } else { 0.0 });
        let rec = s.u.matmul(&sig).unwrap().matmul(&s.v.transpose()).unwrap();
        assert!(rec.sub(m).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn reconstructs_tall_and_wide() {
        check_reconstruction(&pseudo_random(7, 4, 1));
        check_reconstruction(&pseudo_random(3, 8, 2));
        check_reconstruction(&pseudo_random(5, 5, 3));
    }

    #[test]
    fn diagonal_top_two() {
        let m = Matrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let u = top_left_singular_vectors(&m, 2).unwrap();
        assert!((u.get(0, 0).abs() - 1.0).abs() < 1e-15);
        assert!((u.get(1, 1).abs() - 1.0).abs() < 1e-15);
        assert_eq!(u.get(2, 0), 0.0);
        assert_eq!(u.get(2, 1), 0.0);
    }

    #[test]
    fn zero_matrix_still_orthonormal() {
        let s = svd(&Matrix::zeros(4, 2)).unwrap();
        assert_eq!(s.singular_values, vec![0.0, 0.0]);
        assert!(s.u.orthonormality_error() < 1e-15);
    }

    #[test]
    fn rank_bounds() {
        let m = Matrix::zeros(3, 2);
        assert!(matches!(
            top_left_singular_vectors(&m, 3),
            Err(SpectralError::RankOutOfRange {
                requested: 3,
                max: 2
            })
        ));
        assert!(top_left_singular_vectors(&m, 0).is_err());
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        let m = Matrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]);
        assert!((spectral_norm(&m).unwrap() - 5.0).abs() < 1e-14);
    }
}
