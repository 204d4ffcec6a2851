use super::SpectralError;
use crate::tensor::Matrix;

/// Relative size of `|r_jj|` below which a column is treated as dependent.
const RANK_TOLERANCE: f64 = 1e-12;

/// Householder QR of a tall matrix, normalized so `diag(R) > 0`.
///
/// Returns the thin factors `Q` (`rows x cols`) and `R` (`cols x cols`).
pub fn qr_decompose(m: &Matrix) -> Result<(Matrix, Matrix), SpectralError> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(SpectralError::ShapeMismatch(format!(
            "QR needs rows >= cols, got {rows}x{cols}"
        )));
    }
    if !m.is_finite() {
        return Err(SpectralError::NonFinite);
    }
    let col_norms: Vec<f64> = (0..cols)
        .map(|j| m.column(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut a = m.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);

    for j in 0..cols {
        let x: Vec<f64> = (j..rows).map(|i| a.get(i, j)).collect();
        let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.clone();
        let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            for t in v.iter_mut() {
                *t /= vnorm;
            }
            for c in j..cols {
                let proj: f64 = (j..rows).map(|i| v[i - j] * a.get(i, c)).sum();
                for i in j..rows {
                    a.set(i, c, a.get(i, c) - 2.0 * v[i - j] * proj);
                }
            }
        }
        reflectors.push(v);
        let diag = a.get(j, j).abs();
        if diag < RANK_TOLERANCE * col_norms[j] || col_norms[j] == 0.0 {
            return Err(SpectralError::RankDeficient {
                column: j,
                diagonal: diag,
            });
        }
    }

    // Q = H_0 H_1 ... H_{cols-1} applied to the leading identity columns
    let mut q = Matrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 });
    for (j, v) in reflectors.iter().enumerate().rev() {
        for c in 0..cols {
            let proj: f64 = (j..rows).map(|i| v[i - j] * q.get(i, c)).sum();
            if proj == 0.0 {
                continue;
            }
            for i in j..rows {
                q.set(i, c, q.get(i, c) - 2.0 * v[i - j] * proj);
            }
        }
    }
    let mut r = Matrix::from_fn(cols, cols, |i, j| if i <= j { a.get(i, j) } else { 0.0 });
    for j in 0..cols {
        if r.get(j, j) < 0.0 {
            for i in 0..rows {
                q.set(i, j, -q.get(i, j));
            }
            for c in 0..cols {
                r.set(j, c, -r.get(j, c));
            }
        }
    }
    Ok((q, r))
}

/// Orthonormal basis for the column space of a full-column-rank matrix.
pub fn qr_orthonormalize(m: &Matrix) -> Result<Matrix, SpectralError> {
    qr_decompose(m).map(|(q, _)| q)
}
