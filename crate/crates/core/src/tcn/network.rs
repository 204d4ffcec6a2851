//! Parameter layout, forward pass and reverse-mode gradients.
//!
//! Weights live in one flat vector. Per block, in order:
//!
//! | tensor   | shape                           |
//! |----------|---------------------------------|
//! | conv1 W  | `kernel x channels x in`        |
//! | conv1 b  | `channels`                      |
//! | conv2 W  | `kernel x channels x channels`  |
//! | conv2 b  | `channels`                      |
//! | skip W   | `channels x in` (only if `in != channels`) |
//! | skip b   | `channels` (same condition)     |
//!
//! followed by the output map `W: out x channels_last`, `b: out`.
//! Convolution weights are tap-major: entry `(j, o, i)` sits at
//! `(j * out + o) * in + i`.

use rand::Rng as _;

use super::{Activation, TcnConfig, TcnError, TcnModel};
use crate::rng::{stream_rng, streams, Rng};
use crate::tensor::Matrix;

#[derive(Clone, Debug)]
pub(crate) struct BlockLayout {
    pub in_ch: usize,
    pub out_ch: usize,
    pub dilation: usize,
    pub conv1_w: usize,
    pub conv1_b: usize,
    pub conv2_w: usize,
    pub conv2_b: usize,
    /// `(weight offset, bias offset)` of the 1x1 skip projection.
    pub skip: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub blocks: Vec<BlockLayout>,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(config: &TcnConfig) -> Self {
        let k = config.kernel_size;
        let mut offset = 0;
        let mut take = |n: usize| {
            let o = offset;
            offset += n;
            o
        };
        let mut in_ch = config.network_input_width();
        let mut blocks = Vec::with_capacity(config.channels.len());
        for (&out_ch, &dilation) in config.channels.iter().zip(&config.dilations) {
            let conv1_w = take(k * out_ch * in_ch);
            let conv1_b = take(out_ch);
            let conv2_w = take(k * out_ch * out_ch);
            let conv2_b = take(out_ch);
            let skip = (in_ch != out_ch).then(|| (take(out_ch * in_ch), take(out_ch)));
            blocks.push(BlockLayout {
                in_ch,
                out_ch,
                dilation,
                conv1_w,
                conv1_b,
                conv2_w,
                conv2_b,
                skip,
            });
            in_ch = out_ch;
        }
        let out_w = take(config.output_width * in_ch);
        let out_b = take(config.output_width);
        Layout {
            blocks,
            out_w,
            out_b,
            total: offset,
        }
    }
}

/// Closed-form parameter count.
///
/// Per block with `c_in` inputs and `c` channels:
/// `K c_in c + c + K c c + c`, plus `c_in c + c` when `c_in != c`.
/// The output map adds `c_last q + q`.
pub fn parameter_count(config: &TcnConfig) -> usize {
    let k = config.kernel_size;
    let mut c_in = config.network_input_width();
    let mut total = 0;
    for &c in &config.channels {
        total += k * c_in * c + c + k * c * c + c;
        if c_in != c {
            total += c_in * c + c;
        }
        c_in = c;
    }
    total + c_in * config.output_width + config.output_width
}

/// Fan-in scaled uniform weights, zero biases.
pub(crate) fn init_weights(config: &TcnConfig, layout: &Layout, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, streams::WEIGHTS);
    let mut w = vec![0.0; layout.total];
    let k = config.kernel_size;
    let mut fill = |rng: &mut Rng, start: usize, len: usize, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for v in &mut w[start..start + len] {
            *v = rng.random_range(-bound..bound);
        }
    };
    for b in &layout.blocks {
        fill(&mut rng, b.conv1_w, k * b.out_ch * b.in_ch, k * b.in_ch);
        fill(&mut rng, b.conv2_w, k * b.out_ch * b.out_ch, k * b.out_ch);
        if let Some((sw, _)) = b.skip {
            fill(&mut rng, sw, b.out_ch * b.in_ch, b.in_ch);
        }
    }
    let last = layout.blocks.last().map_or(0, |b| b.out_ch);
    fill(&mut rng, layout.out_w, config.output_width * last, last);
    w
}

/// Dilated causal convolution of a `T x in` sequence.
fn causal_conv(
    input: &Matrix,
    w: &[f64],
    b: &[f64],
    out_ch: usize,
    kernel: usize,
    dilation: usize,
) -> Matrix {
    let in_ch = input.cols();
    let steps = input.rows();
    let mut out = Matrix::zeros(steps, out_ch);
    for t in 0..steps {
        let row = out.row_mut(t);
        row.copy_from_slice(b);
        for j in 0..kernel {
            let lag = (kernel - 1 - j) * dilation;
            if lag > t {
                continue;
            }
            let x = input.row(t - lag);
            let tap = &w[j * out_ch * in_ch..(j + 1) * out_ch * in_ch];
            for (o, acc) in row.iter_mut().enumerate() {
                let wo = &tap[o * in_ch..(o + 1) * in_ch];
                *acc += wo.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients of [`causal_conv`] and returns the
/// gradient with respect to its input.
#[allow(clippy::too_many_arguments)]
fn causal_conv_backward(
    input: &Matrix,
    w: &[f64],
    grad_out: &Matrix,
    kernel: usize,
    dilation: usize,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) -> Matrix {
    let in_ch = input.cols();
    let out_ch = grad_out.cols();
    let steps = input.rows();
    let mut grad_in = Matrix::zeros(steps, in_ch);
    for t in 0..steps {
        let g = grad_out.row(t);
        for (gb, &gv) in grad_b.iter_mut().zip(g) {
            *gb += gv;
        }
        for j in 0..kernel {
            let lag = (kernel - 1 - j) * dilation;
            if lag > t {
                continue;
            }
            let s = t - lag;
            let tap_off = j * out_ch * in_ch;
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let base = tap_off + o * in_ch;
                let x = input.row(s);
                for (gw, &xv) in grad_w[base..base + in_ch].iter_mut().zip(x) {
                    *gw += go * xv;
                }
                let wo = &w[base..base + in_ch];
                for (gi, &wv) in grad_in.row_mut(s).iter_mut().zip(wo) {
                    *gi += go * wv;
                }
            }
        }
    }
    grad_in
}

/// Per-step affine map `x W^T + b` for `W: out x in`.
fn pointwise(input: &Matrix, w: &[f64], b: &[f64], out_ch: usize) -> Matrix {
    let in_ch = input.cols();
    let mut out = Matrix::zeros(input.rows(), out_ch);
    for t in 0..input.rows() {
        let x = input.row(t);
        for (o, acc) in out.row_mut(t).iter_mut().enumerate() {
            let wo = &w[o * in_ch..(o + 1) * in_ch];
            *acc = b[o] + wo.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

fn pointwise_backward(
    input: &Matrix,
    w: &[f64],
    grad_out: &Matrix,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) -> Matrix {
    let in_ch = input.cols();
    let mut grad_in = Matrix::zeros(input.rows(), in_ch);
    for t in 0..input.rows() {
        let x = input.row(t);
        for (o, &go) in grad_out.row(t).iter().enumerate() {
            grad_b[o] += go;
            if go == 0.0 {
                continue;
            }
            let base = o * in_ch;
            for (gw, &xv) in grad_w[base..base + in_ch].iter_mut().zip(x) {
                *gw += go * xv;
            }
            for (gi, &wv) in grad_in.row_mut(t).iter_mut().zip(&w[base..base + in_ch]) {
                *gi += go * wv;
            }
        }
    }
    grad_in
}

pub(crate) struct BlockCache {
    input: Matrix,
    z1: Matrix,
    a1: Matrix,
    mask1: Option<Matrix>,
    z2: Matrix,
    mask2: Option<Matrix>,
    pre: Matrix,
}

pub(crate) struct ForwardCache {
    blocks: Vec<BlockCache>,
    hidden: Matrix,
    pub output: Matrix,
}

impl ForwardCache {
    /// Whether every pre-activation has the same sign in both passes.
    pub(crate) fn same_kinks(&self, other: &ForwardCache) -> bool {
        let signs = |m: &Matrix| m.data().iter().map(|&v| v > 0.0).collect::<Vec<_>>();
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| {
            signs(&a.z1) == signs(&b.z1)
                && signs(&a.z2) == signs(&b.z2)
                && signs(&a.pre) == signs(&b.pre)
        })
    }
}

/// Source of dropout masks during training.
pub(crate) struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng,
}

impl Dropout<'_> {
    fn mask(&mut self, rows: usize, cols: usize) -> Matrix {
        let keep = 1.0 - self.rate;
        let scale = 1.0 / keep;
        Matrix::from_fn(rows, cols, |_, _| {
            if self.rng.random::<f64>() < keep {
                scale
            } else {
                0.0
            }
        })
    }
}

fn activate(z: &Matrix, act: Activation, mask: Option<&Matrix>) -> Matrix {
    let mut a = z.clone();
    for v in a.data_mut() {
        *v = act.apply(*v);
    }
    if let Some(m) = mask {
        for (v, s) in a.data_mut().iter_mut().zip(m.data()) {
            *v *= s;
        }
    }
    a
}

/// Backpropagates through `a = act(z) * mask`.
fn activate_backward(
    grad_a: &Matrix,
    z: &Matrix,
    act: Activation,
    mask: Option<&Matrix>,
) -> Matrix {
    let mut g = grad_a.clone();
    for (gv, &zv) in g.data_mut().iter_mut().zip(z.data()) {
        *gv *= act.derivative(zv);
    }
    if let Some(m) = mask {
        for (gv, s) in g.data_mut().iter_mut().zip(m.data()) {
            *gv *= s;
        }
    }
    g
}

impl TcnModel {
    pub(crate) fn layout(&self) -> Layout {
        Layout::new(&self.config)
    }

    /// Forward pass keeping everything the backward pass needs.
    pub(crate) fn forward_cached(
        &self,
        inputs: &Matrix,
        mut dropout: Option<Dropout<'_>>,
    ) -> ForwardCache {
        let layout = self.layout();
        let w = &self.weights;
        let k = self.config.kernel_size;
        let act = self.config.activation;
        let mut h = inputs.clone();
        let mut blocks = Vec::with_capacity(layout.blocks.len());
        for b in &layout.blocks {
            let steps = h.rows();
            let z1 = causal_conv(
                &h,
                &w[b.conv1_w..b.conv1_b],
                &w[b.conv1_b..b.conv1_b + b.out_ch],
                b.out_ch,
                k,
                b.dilation,
            );
            let mask1 = dropout.as_mut().map(|d| d.mask(steps, b.out_ch));
            let a1 = activate(&z1, act, mask1.as_ref());
            let z2 = causal_conv(
                &a1,
                &w[b.conv2_w..b.conv2_b],
                &w[b.conv2_b..b.conv2_b + b.out_ch],
                b.out_ch,
                k,
                b.dilation,
            );
            let mask2 = dropout.as_mut().map(|d| d.mask(steps, b.out_ch));
            let a2 = activate(&z2, act, mask2.as_ref());
            let skip = match b.skip {
                Some((sw, sb)) => pointwise(&h, &w[sw..sb], &w[sb..sb + b.out_ch], b.out_ch),
                None => h.clone(),
            };
            let pre = a2.add(&skip).expect("block shapes agree");
            let out = activate(&pre, act, None);
            blocks.push(BlockCache {
                input: h,
                z1,
                a1,
                mask1,
                z2,
                mask2,
                pre,
            });
            h = out;
        }
        let output = pointwise(
            &h,
            &w[layout.out_w..layout.out_b],
            &w[layout.out_b..layout.out_b + self.config.output_width],
            self.config.output_width,
        );
        ForwardCache {
            blocks,
            hidden: h,
            output,
        }
    }

    /// Gradient of a loss with respect to all weights, given the loss
    /// gradient with respect to the outputs.
    pub(crate) fn backward(&self, cache: &ForwardCache, grad_output: &Matrix) -> Vec<f64> {
        let layout = self.layout();
        let w = &self.weights;
        let k = self.config.kernel_size;
        let act = self.config.activation;
        let mut grad = vec![0.0; layout.total];
        let q = self.config.output_width;

        let (head, tail) = grad.split_at_mut(layout.out_b);
        let mut grad_h = pointwise_backward(
            &cache.hidden,
            &w[layout.out_w..layout.out_b],
            grad_output,
            &mut head[layout.out_w..],
            &mut tail[..q],
        );

        for (b, c) in layout.blocks.iter().zip(&cache.blocks).rev() {
            let grad_pre = activate_backward(&grad_h, &c.pre, act, None);
            let mut grad_in = match b.skip {
                Some((sw, sb)) => {
                    let (head, tail) = grad.split_at_mut(sb);
                    pointwise_backward(
                        &c.input,
                        &w[sw..sb],
                        &grad_pre,
                        &mut head[sw..],
                        &mut tail[..b.out_ch],
                    )
                }
                None => grad_pre.clone(),
            };
            let grad_z2 = activate_backward(&grad_pre, &c.z2, act, c.mask2.as_ref());
            let (head, tail) = grad.split_at_mut(b.conv2_b);
            let grad_a1 = causal_conv_backward(
                &c.a1,
                &w[b.conv2_w..b.conv2_b],
                &grad_z2,
                k,
                b.dilation,
                &mut head[b.conv2_w..],
                &mut tail[..b.out_ch],
            );
            let grad_z1 = activate_backward(&grad_a1, &c.z1, act, c.mask1.as_ref());
            let (head, tail) = grad.split_at_mut(b.conv1_b);
            let through_conv = causal_conv_backward(
                &c.input,
                &w[b.conv1_w..b.conv1_b],
                &grad_z1,
                k,
                b.dilation,
                &mut head[b.conv1_w..],
                &mut tail[..b.out_ch],
            );
            for (g, v) in grad_in.data_mut().iter_mut().zip(through_conv.data()) {
                *g += v;
            }
            grad_h = grad_in;
        }
        grad
    }

    /// Mean squared error over rows `range` and its weight gradient.
    pub(crate) fn loss_and_gradient_with(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
        range: std::ops::Range<usize>,
        dropout: Option<Dropout<'_>>,
    ) -> (f64, Vec<f64>) {
        let cache = self.forward_cached(inputs, dropout);
        let q = self.config.output_width;
        let count = (range.len() * q) as f64;
        let mut grad_out = Matrix::zeros(inputs.rows(), q);
        let mut loss = 0.0;
        for t in range {
            let y = cache.output.row(t);
            let target = targets.row(t);
            let g = grad_out.row_mut(t);
            for o in 0..q {
                let diff = y[o] - target[o];
                loss += diff * diff;
                g[o] = 2.0 * diff / count;
            }
        }
        let grad = self.backward(&cache, &grad_out);
        (loss / count, grad)
    }

    pub(crate) fn check_inputs(&self, inputs: &Matrix) -> Result<(), TcnError> {
        let expected = self.config.network_input_width();
        if inputs.cols() != expected {
            return Err(TcnError::WidthMismatch {
                expected,
                actual: inputs.cols(),
            });
        }
        Ok(())
    }
}
