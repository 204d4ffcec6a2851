//! Shared fixtures for the benchmarks.

use fattnn::tensor::{Matrix, TensorSeries};
use fattnn::{generate, SimConfig, TcnConfig};

/// Covariates and responses of the smallest reference configuration.
pub fn reference_series(n: usize, seed: u64) -> (TensorSeries, TensorSeries) {
    let mut cfg = SimConfig::config3(seed);
    cfg.n = n;
    let d = generate(&cfg).expect("reference config is valid");
    (d.covariates, d.responses)
}

/// Default network for the given widths with a short training budget.
pub fn short_tcn(input_width: usize, output_width: usize, epochs: usize) -> TcnConfig {
    let mut c = TcnConfig::new(input_width, output_width);
    c.epochs = epochs;
    c.patience = 0;
    c
}

/// Time-major input and target matrices.
pub fn rows(x: &TensorSeries, y: &TensorSeries) -> (Matrix, Matrix) {
    (x.to_matrix(), y.to_matrix())
}
