//! Dense linear-algebra kernels written from scratch: cyclic Jacobi for
//! symmetric eigenproblems, one-sided Jacobi SVD, Householder QR, plus
//! subspace distances and eigen-ratio rank selection.
//!
//! Singular vectors are only meaningful up to sign and rotation within
//! repeated singular values, so comparisons should go through
//! [`sin_theta_distance`] rather than entrywise checks.

mod jacobi;
mod qr;
mod subspace;
mod svd;

use thiserror::Error;

pub use jacobi::{symmetric_eigen, SymmetricEigen};
pub use qr::{qr_decompose, qr_orthonormalize};
pub use subspace::{eigen_ratio_rank, projector_distance, sin_theta_distance};
pub use svd::{spectral_norm, svd, top_left_singular_vectors, SvdResult};

/// Sweep budget multiplier for Jacobi-type routines: `10 * max(rows, cols)`.
pub const SWEEPS_PER_DIMENSION: usize = 10;

/// Relative off-diagonal mass at which Jacobi sweeps are considered converged.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("requested rank {requested} outside 1..={max}")]
    RankOutOfRange { requested: usize, max: usize },
    #[error(
        "{routine} did not converge in {sweeps} sweeps (residual off-diagonal mass {residual:e})"
    )]
    NoConvergence {
        routine: &'static str,
        sweeps: usize,
        residual: f64,
    },
    #[error("matrix is rank deficient at column {column} (|r_jj| = {diagonal:e})")]
    RankDeficient { column: usize, diagonal: f64 },
    #[error("columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite entries in input")]
    NonFinite,
}
