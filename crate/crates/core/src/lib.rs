//! Factor-augmented tensor-on-tensor forecasting.
//!
//! A Tucker factor model compresses a covariate tensor series to a small
//! factor series, and a causal temporal convolutional network maps factors
//! to response tensors. The crate is organized bottom-up:
//!
//! * [`tensor`]: dense tensors, unfoldings, mode products, contractions.
//! * [`spectral`]: Jacobi eigen/SVD, Householder QR, subspace distances.
//! * [`factor`]: TIPUP and iterative TIPUP loading estimation.
//! * [`tcn`]: the network, its gradients, training and checkpoints.
//! * [`simgen`]: seeded simulation of factor, covariate and response series.
//! * [`harness`]: splits, metrics, bootstrap, experiments and data files.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod factor;
pub mod harness;
pub mod io;
pub mod rng;
pub mod simgen;
pub mod spectral;
pub mod tcn;
pub mod tensor;

pub use error::Error;
pub use factor::{
    extract_factors, itipup_fit, reembed, select_ranks, tipup_fit, FactorError, FactorFit,
    ItipupOptions, LoadingSet,
};
pub use harness::{run_fattnn, run_raw_tcn_baseline, Dataset, ExperimentConfig, ExperimentReport};
pub use io::FormatError;
pub use simgen::{generate, SimConfig, SimDataset, Transform};
pub use tcn::{Activation, TcnConfig, TcnError, TcnModel};
pub use tensor::{DenseTensor, Matrix, TensorError, TensorSeries};
