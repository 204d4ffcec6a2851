//! Seeded, stream-separated random number generation.
//!
//! Every consumer derives its own ChaCha stream from `(seed, stream)`, so
//! draws in one component never shift another's and there is no global
//! generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{DenseTensor, Matrix};

/// Named stream identifiers.
pub mod streams {
    pub const TRANSITION: u64 = 1;
    pub const LOADINGS: u64 = 2;
    pub const COEFFICIENTS: u64 = 3;
    pub const INNOVATIONS: u64 = 4;
    pub const COVARIATE_NOISE: u64 = 5;
    pub const RESPONSE_NOISE: u64 = 6;
    pub const WEIGHTS: u64 = 7;
    pub const DROPOUT: u64 = 8;
    pub const BOOTSTRAP: u64 = 9;
    pub const GRAD_CHECK: u64 = 10;
}

pub type Rng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| standard_normal(rng))
}

pub fn normal_tensor(rng: &mut Rng, shape: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| standard_normal(rng))
}
