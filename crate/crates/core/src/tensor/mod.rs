//! Dense tensors, matrices and the multilinear algebra built on them.

mod dense;
mod matrix;
mod ops;
mod series;
mod tucker;

use thiserror::Error;

pub use dense::DenseTensor;
pub use matrix::{kronecker, Matrix};
pub use ops::{
    contracted_product, cp_from_factors, embed_all_modes, fold, frobenius_norm, matricize,
    mode_multiply, multi_mode_multiply, outer_product, project_all_modes, unvectorize, vectorize,
};
pub use series::TensorSeries;
pub use tucker::TuckerDecomp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mode {0} appears more than once")]
    RepeatedMode(usize),
    #[error("expected {expected} entries, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("shape {0:?} has a zero dimension")]
    ZeroDimension(Vec<usize>),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("factor matrices must share a column count: expected {expected}, got {actual}")]
    ColumnCountMismatch { expected: usize, actual: usize },
    #[error("cannot contract {contracted} modes of {left:?} with {right:?}")]
    ContractionMismatch {
        left: Vec<usize>,
        right: Vec<usize>,
        contracted: usize,
    },
    #[error("empty tensor series")]
    EmptySeries,
}
