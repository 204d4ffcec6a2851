//! Tucker-structured tensor factor model
//! `X_t = F_t ×_1 A_1 ... ×_K A_K + E_t`.
//!
//! Loadings are estimated by TIPUP, the top-`r_k` left singular vectors of
//! the time-averaged mode-k inner products
//! `(1/n) Σ_t mat_k(X_t) mat_k(X_t)^T`, and optionally refined by iterative
//! TIPUP, which re-solves each mode after projecting every other mode onto
//! its current loading estimate.

use thiserror::Error;

use crate::spectral::{self, SpectralError};
use crate::tensor::{
    embed_all_modes, mode_multiply, project_all_modes, Matrix, TensorError, TensorSeries,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("series is identically zero; loadings are undefined")]
    DegenerateSeries,
    #[error("empty series")]
    EmptySeries,
    #[error("series contains non-finite entries")]
    NonFinite,
    #[error("expected {expected} ranks, got {actual}")]
    RankCount { expected: usize, actual: usize },
    #[error("rank {rank} for mode {mode} must lie in 1..={dim}")]
    RankOutOfRange {
        mode: usize,
        rank: usize,
        dim: usize,
    },
    #[error("loadings are not orthonormal (mode {mode}, deviation {deviation:e})")]
    NotOrthonormal { mode: usize, deviation: f64 },
}

/// Per-mode loading matrices with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadingSet {
    loadings: Vec<Matrix>,
}

impl LoadingSet {
    /// Orthonormality is checked to `1e-10`.
    pub fn new(loadings: Vec<Matrix>) -> Result<Self, FactorError> {
        for (mode, a) in loadings.iter().enumerate() {
            let deviation = a.orthonormality_error();
            if !(deviation <= 1e-10) || a.cols() > a.rows() {
                return Err(FactorError::NotOrthonormal { mode, deviation });
            }
        }
        Ok(Self { loadings })
    }

    pub fn loadings(&self) -> &[Matrix] {
        &self.loadings
    }

    pub fn get(&self, mode: usize) -> &Matrix {
        &self.loadings[mode]
    }

    pub fn order(&self) -> usize {
        self.loadings.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.loadings.iter().map(Matrix::cols).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.loadings.iter().map(Matrix::rows).collect()
    }

    pub fn into_inner(self) -> Vec<Matrix> {
        self.loadings
    }
}

/// Stopping controls for iterative TIPUP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItipupOptions {
    /// Stop once every mode's projector moves by at most this much in
    /// spectral norm. `f64::INFINITY` disables refinement.
    pub tolerance: f64,
    /// Maximum number of refinement sweeps; `0` disables refinement.
    pub max_iter: usize,
}

impl Default for ItipupOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iter: 30,
        }
    }
}

/// Result of [`itipup_fit`].
#[derive(Clone, Debug)]
pub struct FactorFit {
    pub loadings: LoadingSet,
    /// `X_t ×_k Â_k^T` for every `t` of the fitted series.
    pub factors: TensorSeries,
    pub iterations_used: usize,
    /// Largest projector change in the last sweep; `None` without refinement.
    pub final_subspace_change: Option<f64>,
}

fn check_series(series: &TensorSeries) -> Result<(), FactorError> {
    if series.is_empty() {
        return Err(FactorError::EmptySeries);
    }
    if !series.is_finite() {
        return Err(FactorError::NonFinite);
    }
    Ok(())
}

fn check_ranks(dims: &[usize], ranks: &[usize]) -> Result<(), FactorError> {
    if ranks.len() != dims.len() {
        return Err(FactorError::RankCount {
            expected: dims.len(),
            actual: ranks.len(),
        });
    }
    for (mode, (&r, &d)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > d {
            return Err(FactorError::RankOutOfRange {
                mode,
                rank: r,
                dim: d,
            });
        }
    }
    Ok(())
}

/// `(1/n) Σ_t mat_k(X_t) mat_k(X_t)^T`, a `d_k x d_k` symmetric matrix.
///
/// The product does not depend on the column order of the unfolding, so it
/// is accumulated straight from the canonical layout.
pub fn tipup_matrix(series: &TensorSeries, mode: usize) -> Result<Matrix, FactorError> {
    if series.is_empty() {
        return Err(FactorError::EmptySeries);
    }
    let shape = series.shape();
    if mode >= shape.len() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: shape.len(),
        }
        .into());
    }
    let dk = shape[mode];
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    let mut m = Matrix::zeros(dk, dk);
    for x in series {
        let data = x.data();
        for l in 0..left {
            let block = &data[l * dk * right..(l + 1) * dk * right];
            for a in 0..dk {
                let ra = &block[a * right..(a + 1) * right];
                for b in a..dk {
                    let rb = &block[b * right..(b + 1) * right];
                    let s: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                    m.set(a, b, m.get(a, b) + s);
                }
            }
        }
    }
    let inv_n = 1.0 / series.len() as f64;
    for a in 0..dk {
        for b in a..dk {
            let v = m.get(a, b) * inv_n;
            m.set(a, b, v);
            m.set(b, a, v);
        }
    }
    Ok(m)
}

/// TIPUP loading estimates, one independent SVD per mode.
pub fn tipup_fit(series: &TensorSeries, ranks: &[usize]) -> Result<LoadingSet, FactorError> {
    check_series(series)?;
    check_ranks(series.shape(), ranks)?;
    let loadings = ranks
        .iter()
        .enumerate()
        .map(|(mode, &r)| {
            let m = tipup_matrix(series, mode)?;
            if (0..m.rows()).all(|i| m.get(i, i) == 0.0) {
                return Err(FactorError::DegenerateSeries);
            }
            Ok(spectral::top_left_singular_vectors(&m, r)?)
        })
        .collect::<Result<Vec<_>, FactorError>>()?;
    LoadingSet::new(loadings)
}

/// Projects every mode except `skip` onto the transposed loadings.
fn project_except(
    series: &TensorSeries,
    loadings: &[Matrix],
    skip: usize,
) -> Result<TensorSeries, FactorError> {
    let transposed: Vec<Matrix> = loadings.iter().map(Matrix::transpose).collect();
    let mut shape = series.shape().to_vec();
    for (mode, a) in loadings.iter().enumerate() {
        if mode != skip {
            shape[mode] = a.cols();
        }
    }
    let projected = series.map(shape, |x| {
        let mut z = x.clone();
        for (mode, at) in transposed.iter().enumerate() {
            if mode != skip {
                z = mode_multiply(&z, at, mode)?;
            }
        }
        Ok(z)
    })?;
    Ok(projected)
}

/// Iterative TIPUP.
///
/// Starts from [`tipup_fit`]. Each sweep updates modes `0..K` in order, using
/// the loadings already refreshed in this sweep for earlier modes and the
/// previous sweep's loadings for later modes. Stops after `max_iter` sweeps
/// or once `max_k ||Â_k Â_k^T - Â_k' Â_k'^T||_2 <= tolerance`. Hitting the
/// sweep limit is not an error.
pub fn itipup_fit(
    series: &TensorSeries,
    ranks: &[usize],
    options: ItipupOptions,
) -> Result<FactorFit, FactorError> {
    let initial = tipup_fit(series, ranks)?;
    let mut current = initial.into_inner();
    let mut iterations_used = 0;
    let mut final_change = None;
    let refine = options.max_iter > 0 && options.tolerance.is_finite();

    if refine {
        while iterations_used < options.max_iter {
            let previous = current.clone();
            for (mode, &r) in ranks.iter().enumerate() {
                let z = project_except(series, &current, mode)?;
                let m = tipup_matrix(&z, mode)?;
                current[mode] = spectral::top_left_singular_vectors(&m, r)?;
            }
            iterations_used += 1;
            let mut change: f64 = 0.0;
            for (new, old) in current.iter().zip(&previous) {
                change = change.max(spectral::projector_distance(new, old)?);
            }
            final_change = Some(change);
            if change <= options.tolerance {
                break;
            }
        }
    }

    let loadings = LoadingSet::new(current)?;
    let factors = extract_factors(series, &loadings)?;
    Ok(FactorFit {
        loadings,
        factors,
        iterations_used,
        final_subspace_change: final_change,
    })
}

/// `F̂_t = X_t ×_k Â_k^T` for every `t`.
pub fn extract_factors(
    series: &TensorSeries,
    loadings: &LoadingSet,
) -> Result<TensorSeries, FactorError> {
    if series.shape() != loadings.dims().as_slice() {
        return Err(TensorError::ShapeMismatch {
            left: series.shape().to_vec(),
            right: loadings.dims(),
        }
        .into());
    }
    Ok(series.map(loadings.ranks(), |x| {
        project_all_modes(x, loadings.loadings())
    })?)
}

/// `F_t ×_k Â_k` for every `t`; the inverse of [`extract_factors`] on the
/// loading subspace.
pub fn reembed(factors: &TensorSeries, loadings: &LoadingSet) -> Result<TensorSeries, FactorError> {
    if factors.shape() != loadings.ranks().as_slice() {
        return Err(TensorError::ShapeMismatch {
            left: factors.shape().to_vec(),
            right: loadings.ranks(),
        }
        .into());
    }
    Ok(factors.map(loadings.dims(), |f| embed_all_modes(f, loadings.loadings()))?)
}

/// Eigen-ratio rank estimate per mode from the TIPUP matrices.
///
/// On pure noise the ratios are flat and the tie-break toward small ranks
/// usually returns 1 for every mode.
pub fn select_ranks(series: &TensorSeries, r_max: &[usize]) -> Result<Vec<usize>, FactorError> {
    check_series(series)?;
    let dims = series.shape();
    if r_max.len() != dims.len() {
        return Err(FactorError::RankCount {
            expected: dims.len(),
            actual: r_max.len(),
        });
    }
    r_max
        .iter()
        .enumerate()
        .map(|(mode, &cap)| {
            if cap == 0 || cap >= dims[mode] {
                return Err(FactorError::RankOutOfRange {
                    mode,
                    rank: cap,
                    dim: dims[mode] - 1,
                });
            }
            let m = tipup_matrix(series, mode)?;
            let sv = spectral::svd(&m)?.singular_values;
            Ok(spectral::eigen_ratio_rank(&sv, cap)?)
        })
        .collect()
}
