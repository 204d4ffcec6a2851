//! Standardization, Adam training, forecasting and gradient checking.

use rand::seq::index::sample;

use super::network::{init_weights, Dropout, Layout};
use super::{Activation, TcnConfig, TcnError, TcnModel};
use crate::rng::{stream_rng, streams};
use crate::tensor::{DenseTensor, Matrix};

/// Per-column affine standardization `(x - mean) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    /// Column means and population standard deviations of `rows`.
    /// Constant columns get scale 1.
    pub fn fit(data: &Matrix) -> Self {
        let n = data.rows().max(1) as f64;
        let width = data.cols();
        let mut mean = vec![0.0; width];
        for t in 0..data.rows() {
            for (m, v) in mean.iter_mut().zip(data.row(t)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; width];
        for t in 0..data.rows() {
            for ((s, v), m) in var.iter_mut().zip(data.row(t)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + sd) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub(crate) fn from_parts(mean: Vec<f64>, scale: Vec<f64>) -> Self {
        Self { mean, scale }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    fn forward_into(&self, src: &[f64], dst: &mut [f64]) {
        for (((d, s), m), c) in dst.iter_mut().zip(src).zip(&self.mean).zip(&self.scale) {
            *d = (s - m) / c;
        }
    }

    pub fn apply(&self, data: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(data.rows(), data.cols());
        for t in 0..data.rows() {
            self.forward_into(data.row(t), out.row_mut(t));
        }
        out
    }

    pub fn invert(&self, data: &Matrix) -> Matrix {
        let mut out = data.clone();
        for t in 0..out.rows() {
            for ((v, m), c) in out.row_mut(t).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * c + m;
            }
        }
        out
    }
}

/// Loss trace of a training run, in standardized units.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Training-range loss after each epoch.
    pub train_losses: Vec<f64>,
    /// Validation loss after each epoch (empty without a validation tail).
    pub val_losses: Vec<f64>,
    /// Training-range loss before the first update.
    pub initial_loss: f64,
    /// Training-range loss of the returned weights.
    pub final_loss: f64,
    /// Epoch (1-based) whose weights were kept; 0 means the initial weights.
    pub best_epoch: usize,
    pub optimizer_steps: usize,
}

/// Outcome of comparing reverse-mode and finite-difference gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_parameter: usize,
    pub checked: usize,
    /// Times a step was shrunk because it crossed a ReLU kink.
    pub reduced_steps: usize,
}

/// Floor on the relative-error denominator; below it, errors are absolute.
const GRAD_CHECK_FLOOR: f64 = 1e-6;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..w.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            w[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

fn concat_columns(left: &Matrix, right: &Matrix) -> Matrix {
    let (l, r) = (left.cols(), right.cols());
    let mut out = Matrix::zeros(left.rows(), l + r);
    for t in 0..left.rows() {
        let row = out.row_mut(t);
        row[..l].copy_from_slice(left.row(t));
        row[l..].copy_from_slice(right.row(t));
    }
    out
}

/// Row `t` holds row `t - 1` of `m`; row 0 is zero.
fn shift_down(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 1..m.rows() {
        out.row_mut(t).copy_from_slice(m.row(t - 1));
    }
    out
}

impl TcnModel {
    /// Untrained model with weights drawn from `config.seed`.
    pub fn new(config: TcnConfig) -> Result<Self, TcnError> {
        let seed = config.seed;
        Self::with_seed(config, seed)
    }

    /// Untrained model with weights drawn from `seed`; identity
    /// standardization.
    pub fn with_seed(config: TcnConfig, seed: u64) -> Result<Self, TcnError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let weights = init_weights(&config, &layout, seed);
        Ok(Self {
            input_norm: Standardizer::identity(config.input_width),
            target_norm: Standardizer::identity(config.output_width),
            config,
            weights,
        })
    }

    pub(crate) fn from_parts(
        config: TcnConfig,
        weights: Vec<f64>,
        input_norm: Standardizer,
        target_norm: Standardizer,
    ) -> Result<Self, TcnError> {
        config.validate()?;
        let expected = Layout::new(&config).total;
        if weights.len() != expected {
            return Err(TcnError::InvalidConfig(format!(
                "{} weights for a network with {expected} parameters",
                weights.len()
            )));
        }
        if input_norm.width() != config.input_width || target_norm.width() != config.output_width {
            return Err(TcnError::InvalidConfig(
                "standardizer widths do not match the network".into(),
            ));
        }
        Ok(Self {
            config,
            weights,
            input_norm,
            target_norm,
        })
    }

    pub fn config(&self) -> &TcnConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn input_standardizer(&self) -> &Standardizer {
        &self.input_norm
    }

    pub fn target_standardizer(&self) -> &Standardizer {
        &self.target_norm
    }

    /// Raw network map on already standardized inputs of width
    /// [`TcnConfig::network_input_width`]; outputs are standardized too.
    pub fn forward_standardized(&self, inputs: &Matrix) -> Result<Matrix, TcnError> {
        self.check_inputs(inputs)?;
        Ok(self.forward_cached(inputs, None).output)
    }

    /// Network map in data units. `inputs` has width
    /// [`TcnConfig::network_input_width`]: features, then (if enabled) the
    /// previous step's response.
    pub fn forward(&self, inputs: &Matrix) -> Result<Matrix, TcnError> {
        self.check_inputs(inputs)?;
        let z = self.standardize_network_inputs(inputs);
        Ok(self
            .target_norm
            .invert(&self.forward_cached(&z, None).output))
    }

    fn standardize_network_inputs(&self, inputs: &Matrix) -> Matrix {
        let f = self.config.input_width;
        let mut out = Matrix::zeros(inputs.rows(), inputs.cols());
        for t in 0..inputs.rows() {
            let (src, dst) = (inputs.row(t), out.row_mut(t));
            self.input_norm.forward_into(&src[..f], &mut dst[..f]);
            if self.config.use_lagged_response {
                self.target_norm.forward_into(&src[f..], &mut dst[f..]);
            }
        }
        out
    }

    /// Appends lagged responses when enabled; the first step's lag is the
    /// target mean.
    fn assemble_inputs(&self, features: &Matrix, responses: &Matrix) -> Matrix {
        if !self.config.use_lagged_response {
            return features.clone();
        }
        let mut lagged = shift_down(responses);
        if lagged.rows() > 0 {
            lagged.row_mut(0).copy_from_slice(self.target_norm.mean());
        }
        concat_columns(features, &lagged)
    }

    fn check_pair(&self, features: &Matrix, targets: &Matrix) -> Result<(), TcnError> {
        if features.rows() == 0 {
            return Err(TcnError::EmptySequence);
        }
        if features.cols() != self.config.input_width {
            return Err(TcnError::WidthMismatch {
                expected: self.config.input_width,
                actual: features.cols(),
            });
        }
        if targets.cols() != self.config.output_width {
            return Err(TcnError::WidthMismatch {
                expected: self.config.output_width,
                actual: targets.cols(),
            });
        }
        if features.rows() != targets.rows() {
            return Err(TcnError::LengthMismatch(format!(
                "{} input steps but {} target steps",
                features.rows(),
                targets.rows()
            )));
        }
        Ok(())
    }

    /// Fits standardization on the given range, then minimizes mean squared
    /// error in standardized units with Adam. Keeps the weights with the
    /// best validation loss (or training loss without a validation tail)
    /// among epochs whose training loss does not exceed the initial one.
    pub fn train(&mut self, features: &Matrix, targets: &Matrix) -> Result<TrainReport, TcnError> {
        self.check_pair(features, targets)?;
        if !features.is_finite() || !targets.is_finite() {
            return Err(TcnError::NonFiniteInput);
        }
        let n = features.rows();
        self.input_norm = Standardizer::fit(features);
        self.target_norm = Standardizer::fit(targets);
        let raw_inputs = self.assemble_inputs(features, targets);
        let inputs = self.standardize_network_inputs(&raw_inputs);
        let targets = self.target_norm.apply(targets);

        let cfg = self.config.clone();
        let mut n_val = (cfg.validation_fraction * n as f64).floor() as usize;
        if cfg.patience == 0 || n_val >= n {
            n_val = 0;
        }
        let n_train = n - n_val;
        let history = cfg.receptive_field() - 1;

        let mut dropout_rng = stream_rng(cfg.seed, streams::DROPOUT);
        let mut adam = Adam::new(self.weights.len(), cfg.learning_rate);
        let eval = |model: &TcnModel, range: std::ops::Range<usize>| -> f64 {
            if range.is_empty() {
                return f64::NAN;
            }
            let out = model.forward_cached(&inputs, None).output;
            let count = (range.len() * cfg.output_width) as f64;
            range
                .flat_map(|t| {
                    out.row(t)
                        .iter()
                        .zip(targets.row(t))
                        .map(|(a, b)| (a - b) * (a - b))
                        .collect::<Vec<_>>()
                })
                .sum::<f64>()
                / count
        };

        let initial_loss = eval(self, 0..n_train);
        let score = |train: f64, val: f64| if n_val > 0 { val } else { train };
        let mut best = (score(initial_loss, eval(self, n_train..n)), 0usize);
        let mut best_weights = self.weights.clone();
        let mut last_finite = initial_loss;
        let mut report = TrainReport {
            train_losses: Vec::with_capacity(cfg.epochs),
            val_losses: Vec::new(),
            initial_loss,
            final_loss: initial_loss,
            best_epoch: 0,
            optimizer_steps: 0,
        };
        let window = cfg.batch_length.unwrap_or(n_train).min(n_train);
        for epoch in 1..=cfg.epochs {
            let mut start = 0;
            while start < n_train {
                let end = (start + window).min(n_train);
                let from = start.saturating_sub(history);
                let slice_in =
                    Matrix::from_fn(end - from, inputs.cols(), |i, j| inputs.get(from + i, j));
                let slice_tg =
                    Matrix::from_fn(end - from, targets.cols(), |i, j| targets.get(from + i, j));
                let dropout = (cfg.dropout_rate > 0.0).then_some(Dropout {
                    rate: cfg.dropout_rate,
                    rng: &mut dropout_rng,
                });
                let (loss, grad) = self.loss_and_gradient_with(
                    &slice_in,
                    &slice_tg,
                    start - from..end - from,
                    dropout,
                );
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(TcnError::NonFiniteLoss { epoch, last_finite });
                }
                adam.step(&mut self.weights, &grad);
                report.optimizer_steps += 1;
                start = end;
            }
            let train_loss = eval(self, 0..n_train);
            if !train_loss.is_finite() {
                return Err(TcnError::NonFiniteLoss { epoch, last_finite });
            }
            last_finite = train_loss;
            report.train_losses.push(train_loss);
            let val_loss = eval(self, n_train..n);
            if n_val > 0 {
                report.val_losses.push(val_loss);
            }
            let s = score(train_loss, val_loss);
            // candidates never exceed the initial training loss
            if s < best.0 && train_loss <= initial_loss {
                best = (s, epoch);
                best_weights.copy_from_slice(&self.weights);
            } else if cfg.patience > 0 && epoch - best.1 >= cfg.patience {
                break;
            }
        }
        self.weights = best_weights;
        report.best_epoch = best.1;
        report.final_loss = eval(self, 0..n_train);
        Ok(report)
    }

    /// Forecasts the `features.rows() - observed.rows()` steps after the
    /// observed range. With lagged responses enabled, each forecast step
    /// feeds the previous prediction back as its lag.
    pub fn forecast(&self, features: &Matrix, observed: &Matrix) -> Result<Matrix, TcnError> {
        let q = self.config.output_width;
        if features.cols() != self.config.input_width {
            return Err(TcnError::WidthMismatch {
                expected: self.config.input_width,
                actual: features.cols(),
            });
        }
        if observed.cols() != q {
            return Err(TcnError::WidthMismatch {
                expected: q,
                actual: observed.cols(),
            });
        }
        let n = observed.rows();
        let total = features.rows();
        if total < n {
            return Err(TcnError::LengthMismatch(format!(
                "{total} feature steps cannot cover {n} observed responses"
            )));
        }
        let m = total - n;
        if m == 0 {
            return Ok(Matrix::zeros(0, q));
        }
        if !features.is_finite() {
            return Err(TcnError::NonFiniteInput);
        }
        if !self.config.use_lagged_response {
            let out = self.forward(features)?;
            return Ok(Matrix::from_fn(m, q, |i, j| out.get(n + i, j)));
        }
        if !observed.is_finite() {
            return Err(TcnError::NonFiniteInput);
        }
        let mut responses = Matrix::zeros(total, q);
        for t in 0..n {
            responses.row_mut(t).copy_from_slice(observed.row(t));
        }
        let history = self.config.receptive_field() - 1;
        for t in n..total {
            let from = t.saturating_sub(history);
            let feats = Matrix::from_fn(t + 1 - from, features.cols(), |i, j| {
                features.get(from + i, j)
            });
            let resp = Matrix::from_fn(t + 1 - from, q, |i, j| responses.get(from + i, j));
            let mut inputs = self.assemble_inputs(&feats, &resp);
            if from > 0 {
                // the lag of the window's first step is a real observation
                let f = self.config.input_width;
                inputs.row_mut(0)[f..].copy_from_slice(responses.row(from - 1));
            }
            let out = self.forward(&inputs)?;
            responses
                .row_mut(t)
                .copy_from_slice(out.row(out.rows() - 1));
        }
        Ok(Matrix::from_fn(m, q, |i, j| responses.get(n + i, j)))
    }

    /// Response tensor at the last step of `features`, reshaped to
    /// `response_shape`.
    pub fn predict(
        &self,
        features: &Matrix,
        observed: &Matrix,
        response_shape: &[usize],
    ) -> Result<DenseTensor, TcnError> {
        let f = self.forecast(features, observed)?;
        if f.rows() == 0 {
            return Err(TcnError::EmptySequence);
        }
        let last = f.row(f.rows() - 1).to_vec();
        DenseTensor::new(response_shape.to_vec(), last)
            .map_err(|e| TcnError::LengthMismatch(e.to_string()))
    }

    /// Mean squared error over all steps, and its gradient, for network
    /// inputs and targets given directly in standardized units.
    pub fn loss_and_gradient(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
    ) -> Result<(f64, Vec<f64>), TcnError> {
        self.check_inputs(inputs)?;
        if targets.cols() != self.config.output_width || targets.rows() != inputs.rows() {
            return Err(TcnError::LengthMismatch(format!(
                "targets {}x{} for {} steps and {} outputs",
                targets.rows(),
                targets.cols(),
                inputs.rows(),
                self.config.output_width
            )));
        }
        if inputs.rows() == 0 {
            return Err(TcnError::EmptySequence);
        }
        Ok(self.loss_and_gradient_with(inputs, targets, 0..inputs.rows(), None))
    }

    /// Runs `steps` Adam updates on the full sequence, in standardized units.
    pub fn optimizer_steps(
        &mut self,
        inputs: &Matrix,
        targets: &Matrix,
        steps: usize,
    ) -> Result<(), TcnError> {
        let mut adam = Adam::new(self.weights.len(), self.config.learning_rate);
        for _ in 0..steps {
            let (_, g) = self.loss_and_gradient(inputs, targets)?;
            adam.step(&mut self.weights, &g);
        }
        Ok(())
    }

    /// Compares the analytic gradient with central differences on
    /// `n_params` parameters drawn without replacement (all of them if
    /// fewer exist). The relative error is
    /// `|a - n| / max(|a|, |n|, 1e-6)`. With ReLU, a step that flips any
    /// pre-activation sign is shrunk tenfold, at most three times.
    pub fn grad_check(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
        epsilon: f64,
        n_params: usize,
        seed: u64,
    ) -> Result<GradCheckReport, TcnError> {
        let (_, analytic) = self.loss_and_gradient(inputs, targets)?;
        let total = self.weights.len();
        let mut rng = stream_rng(seed, streams::GRAD_CHECK);
        let chosen = sample(&mut rng, total, n_params.min(total)).into_vec();
        let mut probe = self.clone();
        let mut report = GradCheckReport {
            max_relative_error: 0.0,
            worst_parameter: 0,
            checked: chosen.len(),
            reduced_steps: 0,
        };
        let count = targets.data().len() as f64;
        let base = self.forward_cached(inputs, None);
        let relu = self.config.activation == Activation::Relu;
        for &i in &chosen {
            let w0 = probe.weights[i];
            let mut h = epsilon;
            let (plus, minus) = loop {
                probe.weights[i] = w0 + h;
                let plus = probe.forward_cached(inputs, None);
                probe.weights[i] = w0 - h;
                let minus = probe.forward_cached(inputs, None);
                let smooth = !relu || (base.same_kinks(&plus) && base.same_kinks(&minus));
                if smooth || h < epsilon * 1e-3 {
                    break (plus.output, minus.output);
                }
                // the step crossed a ReLU kink; shrink it onto one linear piece
                h /= 10.0;
                report.reduced_steps += 1;
            };
            probe.weights[i] = w0;
            // (p - y)^2 - (m - y)^2 = (p - m)(p + m - 2y), without cancelling
            // two full losses
            let delta: f64 = plus
                .data()
                .iter()
                .zip(minus.data())
                .zip(targets.data())
                .map(|((p, m), y)| (p - m) * (p + m - 2.0 * y))
                .sum();
            let numeric = delta / (count * 2.0 * h);
            let a = analytic[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_parameter = i;
            }
        }
        Ok(report)
    }
}
