//! Dilated causal temporal convolutional network with a hand-written
//! backward pass.
//!
//! The network maps a time-major sequence of input vectors (`T x width`
//! matrices, one row per step) to a sequence of output vectors of the same
//! length. Each residual block is two causal convolutions sharing one
//! dilation, each followed by the activation (and dropout while training),
//! plus a skip path that is the identity or a 1x1 projection when the
//! channel count changes; the block output is `act(conv path + skip)`. A
//! per-step linear map produces the outputs.
//!
//! Causality comes from left zero-padding: tap `j` of a kernel of size `K`
//! at dilation `d` reads input step `t - (K - 1 - j) d`.

mod checkpoint;
mod network;
mod train;

use thiserror::Error;

use crate::io::FormatError;

pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use network::parameter_count;
pub use train::{GradCheckReport, Standardizer, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TcnError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("input width {actual} does not match the expected {expected}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("loss became non-finite at epoch {epoch} (last finite loss {last_finite:e})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },
    #[error("non-finite values in network input")]
    NonFiniteInput,
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Identity; makes the whole network a banded linear operator.
    Linear,
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    pub(crate) fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "linear" | "identity" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Architecture and training hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TcnConfig {
    /// Width of the per-step feature vector (flattened factor or covariate
    /// tensor), excluding any lagged response columns.
    pub input_width: usize,
    /// Width of the per-step response vector.
    pub output_width: usize,
    /// Output channels of each residual block.
    pub channels: Vec<usize>,
    pub kernel_size: usize,
    /// Dilation of each residual block; same length as `channels`.
    pub dilations: Vec<usize>,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Loss-window length for mini-batches; `None` trains on the whole
    /// range per step.
    pub batch_length: Option<usize>,
    /// Fraction of the training range held out at its tail for early
    /// stopping.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping; `0` disables
    /// early stopping.
    pub patience: usize,
    pub seed: u64,
    /// Append the previous step's response to each input vector.
    pub use_lagged_response: bool,
}

impl TcnConfig {
    /// Three residual blocks of 32 channels, kernel 3, dilations 1, 2, 4,
    /// ReLU, no dropout, Adam at `1e-3` for 200 full-range epochs, early
    /// stopping on a 10% tail with patience 20.
    pub fn new(input_width: usize, output_width: usize) -> Self {
        Self {
            input_width,
            output_width,
            channels: vec![32, 32, 32],
            kernel_size: 3,
            dilations: vec![1, 2, 4],
            activation: Activation::Relu,
            dropout_rate: 0.0,
            learning_rate: 1e-3,
            epochs: 200,
            batch_length: None,
            validation_fraction: 0.1,
            patience: 20,
            seed: 0,
            use_lagged_response: false,
        }
    }

    /// Columns fed to the first convolution.
    pub fn network_input_width(&self) -> usize {
        self.input_width
            + if self.use_lagged_response {
                self.output_width
            } else {
                0
            }
    }

    /// `1 + Σ_blocks 2 (kernel_size - 1) dilation`.
    pub fn receptive_field(&self) -> usize {
        1 + self
            .dilations
            .iter()
            .map(|d| 2 * (self.kernel_size - 1) * d)
            .sum::<usize>()
    }

    pub fn validate(&self) -> Result<(), TcnError> {
        let bad = |m: String| Err(TcnError::InvalidConfig(m));
        if self.input_width == 0 || self.output_width == 0 {
            return bad("input and output widths must be positive".into());
        }
        if self.channels.is_empty() || self.channels.len() != self.dilations.len() {
            return bad(format!(
                "need one dilation per block: {} channel entries, {} dilations",
                self.channels.len(),
                self.dilations.len()
            ));
        }
        if self.channels.contains(&0) || self.dilations.contains(&0) {
            return bad("channels and dilations must be positive".into());
        }
        if self.kernel_size < 2 {
            return bad(format!(
                "kernel size {} must be at least 2",
                self.kernel_size
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout {} must lie in [0, 1)", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!(
                "learning rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.batch_length == Some(0) {
            return bad("batch length must be positive".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation fraction {} must lie in [0, 1)",
                self.validation_fraction
            ));
        }
        Ok(())
    }
}

/// A network and the standardization it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct TcnModel {
    pub(crate) config: TcnConfig,
    pub(crate) weights: Vec<f64>,
    pub(crate) input_norm: Standardizer,
    pub(crate) target_norm: Standardizer,
}
