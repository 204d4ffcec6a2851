use super::{svd, symmetric_eigen, SpectralError};
use crate::tensor::Matrix;

/// Orthonormality tolerance for inputs to [`sin_theta_distance`].
const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// Floor on the denominator of consecutive singular value ratios.
const RATIO_FLOOR: f64 = 1e-300;

/// Ratios within this relative distance of the best are ties.
const RATIO_TIE: f64 = 1e-12;

/// Sine of the largest principal angle between the column spaces of `u`
/// and `v`, both `m x r` with orthonormal columns.
///
/// Equal to `sqrt(1 - σ_min(u^T v)^2)` and to `||u u^T - v v^T||_2`. It is
/// evaluated as `||(I - u u^T) v||_2`, which keeps full relative accuracy
/// for small angles.
pub fn sin_theta_distance(u: &Matrix, v: &Matrix) -> Result<f64, SpectralError> {
    if u.shape() != v.shape() {
        return Err(SpectralError::ShapeMismatch(format!(
            "sin theta between {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    for m in [u, v] {
        let dev = m.orthonormality_error();
        if !(dev <= ORTHONORMAL_TOLERANCE) {
            return Err(SpectralError::NotOrthonormal { deviation: dev });
        }
    }
    let overlap = u.t_matmul(v).expect("shapes checked");
    let residual = v
        .sub(&u.matmul(&overlap).expect("shapes checked"))
        .expect("shapes checked");
    let s = svd(&residual)?;
    Ok(s.singular_values
        .first()
        .copied()
        .unwrap_or(0.0)
        .clamp(0.0, 1.0))
}

/// Spectral norm of the difference of the orthogonal projectors onto the
/// column spaces of `u` and `v`, computed exactly from the eigenvalues of
/// `u u^T - v v^T`.
pub fn projector_distance(u: &Matrix, v: &Matrix) -> Result<f64, SpectralError> {
    if u.rows() != v.rows() {
        return Err(SpectralError::ShapeMismatch(format!(
            "projectors of dimension {} and {}",
            u.rows(),
            v.rows()
        )));
    }
    let diff = u.projector().sub(&v.projector()).expect("same dimension");
    let e = symmetric_eigen(&diff)?;
    Ok(e.values.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Eigen-ratio rank estimate: the index `i` in `1..=r_max` maximizing
/// `σ_i / σ_{i+1}`, smallest index on ties.
///
/// Denominators are floored at `1e-300` so exact zeros give a finite,
/// dominating ratio. Ratios equal to the best within a relative `1e-12`
/// count as ties.
pub fn eigen_ratio_rank(singular_values: &[f64], r_max: usize) -> Result<usize, SpectralError> {
    if singular_values.is_empty() {
        return Err(SpectralError::InvalidInput(
            "empty singular value list".into(),
        ));
    }
    if r_max == 0 || r_max >= singular_values.len() {
        return Err(SpectralError::InvalidInput(format!(
            "r_max = {} must lie in 1..{}",
            r_max,
            singular_values.len()
        )));
    }
    if singular_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(SpectralError::InvalidInput(
            "singular values must be finite and nonnegative".into(),
        ));
    }
    let mut best_rank = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 0..r_max {
        let ratio = singular_values[i] / singular_values[i + 1].max(RATIO_FLOOR);
        if ratio > best_ratio * (1.0 + RATIO_TIE) || best_ratio == f64::NEG_INFINITY {
            best_ratio = ratio;
            best_rank = i + 1;
        }
    }
    Ok(best_rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_subspaces_have_zero_distance() {
        let u = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(sin_theta_distance(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_lines_have_unit_distance() {
        let e1 = Matrix::column_vector(&[1.0, 0.0]);
        let e2 = Matrix::column_vector(&[0.0, 1.0]);
        assert_eq!(sin_theta_distance(&e1, &e2).unwrap(), 1.0);
        assert!((projector_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn planar_rotation_gives_sine_of_angle() {
        let theta: f64 = 0.3;
        let e1 = Matrix::column_vector(&[1.0, 0.0]);
        let rotated = Matrix::column_vector(&[theta.cos(), theta.sin()]);
        let d = sin_theta_distance(&e1, &rotated).unwrap();
        assert!((d - theta.sin()).abs() < 1e-12);
        let p = projector_distance(&e1, &rotated).unwrap();
        assert!((p - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let a = Matrix::column_vector(&[2.0, 0.0]);
        let b = Matrix::column_vector(&[1.0, 0.0]);
        assert!(matches!(
            sin_theta_distance(&a, &b),
            Err(SpectralError::NotOrthonormal { .. })
        ));
        assert!(sin_theta_distance(&b, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn eigen_ratio_examples() {
        assert_eq!(eigen_ratio_rank(&[10.0, 9.0, 0.1, 0.09], 3).unwrap(), 2);
        // constant ratio: tie goes to the smallest index
        assert_eq!(eigen_ratio_rank(&[8.0, 4.0, 2.0, 1.0, 0.5], 4).unwrap(), 1);
        assert_eq!(
            eigen_ratio_rank(&[1.0, 0.9f64.powi(1), 0.9f64.powi(2), 0.9f64.powi(3)], 3).unwrap(),
            1
        );
        // exact zeros after the true rank
        assert_eq!(eigen_ratio_rank(&[5.0, 3.0, 0.0, 0.0], 3).unwrap(), 2);
    }

    #[test]
    fn eigen_ratio_errors() {
        assert!(eigen_ratio_rank(&[], 1).is_err());
        assert!(eigen_ratio_rank(&[1.0, 0.5], 2).is_err());
        assert!(eigen_ratio_rank(&[1.0, 0.5], 0).is_err());
        assert!(eigen_ratio_rank(&[1.0, -0.5], 1).is_err());
    }
}
