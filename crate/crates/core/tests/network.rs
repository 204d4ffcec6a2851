mod common;

use common::*;
use fattnn::tcn::parameter_count;
use fattnn::tensor::Matrix;
use fattnn::{Activation, TcnConfig, TcnModel};
use proptest::prelude::*;

fn small_config(input: usize, output: usize) -> TcnConfig {
    let mut c = TcnConfig::new(input, output);
    c.channels = vec![6, 5];
    c.dilations = vec![1, 2];
    c.kernel_size = 3;
    c
}

fn head(m: &Matrix, rows: usize) -> Matrix {
    Matrix::from_vec(rows, m.cols(), m.data()[..rows * m.cols()].to_vec()).unwrap()
}

fn sequence(seed: u64, rows: usize, cols: usize) -> Matrix {
    random_matrix(&mut rng(seed), rows, cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn earlier_outputs_ignore_later_inputs(
        seed in 0u64..10_000,
        t in 0usize..19,
        linear in any::<bool>(),
    ) {
        let mut cfg = small_config(3, 2);
        if linear {
            cfg.activation = Activation::Linear;
        }
        let model = TcnModel::with_seed(cfg, seed).unwrap();
        let x = sequence(seed, 20, 3);
        let mut y = x.clone();
        let mut g = rng(seed + 1);
        for s in t + 1..20 {
            let noise = random_matrix(&mut g, 1, 3);
            y.row_mut(s).copy_from_slice(noise.row(0));
        }
        let a = model.forward(&x).unwrap();
        let b = model.forward(&y).unwrap();
        for s in 0..=t {
            prop_assert_eq!(a.row(s), b.row(s));
        }
    }
}

#[test]
fn parameter_count_by_hand() {
    // one block, 4 inputs, 3 channels, kernel 2, 2 outputs:
    // conv1 2*3*4 + 3, conv2 2*3*3 + 3, skip 3*4 + 3, head 2*3 + 2
    let mut cfg = TcnConfig::new(4, 2);
    cfg.channels = vec![3];
    cfg.dilations = vec![1];
    cfg.kernel_size = 2;
    assert_eq!(parameter_count(&cfg), 27 + 21 + 15 + 8);
    assert_eq!(TcnModel::new(cfg).unwrap().weights().len(), 71);
}

#[test]
fn seeded_initialization_is_reproducible() {
    let a = TcnModel::with_seed(small_config(3, 2), 4).unwrap();
    let b = TcnModel::with_seed(small_config(3, 2), 4).unwrap();
    let c = TcnModel::with_seed(small_config(3, 2), 5).unwrap();
    assert_eq!(a.weights(), b.weights());
    assert_ne!(a.weights(), c.weights());
    assert!(a.weights().iter().all(|w| w.is_finite()));
}

#[test]
fn zero_input_gives_head_bias() {
    let mut model = TcnModel::new(small_config(3, 2)).unwrap();
    let n = model.weights().len();
    model.weights_mut()[n - 2] = 0.25;
    model.weights_mut()[n - 1] = -1.5;
    let out = model.forward_standardized(&Matrix::zeros(7, 3)).unwrap();
    for t in 0..7 {
        assert_eq!(out.row(t), &[0.25, -1.5]);
    }
}

#[test]
fn zero_input_zeroes_input_kernel_gradients() {
    let cfg = small_config(3, 2);
    let model = TcnModel::new(cfg).unwrap();
    let targets = sequence(1, 9, 2);
    let (_, g) = model
        .loss_and_gradient(&Matrix::zeros(9, 3), &targets)
        .unwrap();
    // first block: conv1 kernel 3*6*3 entries at the front
    assert!(g[..54].iter().all(|&v| v == 0.0));
    assert!(g.iter().any(|&v| v != 0.0));
}

#[test]
fn training_is_deterministic() {
    let x = sequence(2, 40, 3);
    let y = sequence(3, 40, 2);
    let mut cfg = small_config(3, 2);
    cfg.epochs = 15;
    cfg.batch_length = Some(10);
    cfg.dropout_rate = 0.2;
    let mut a = TcnModel::new(cfg.clone()).unwrap();
    let mut b = TcnModel::new(cfg).unwrap();
    let ra = a.train(&x, &y).unwrap();
    let rb = b.train(&x, &y).unwrap();
    assert_eq!(ra.train_losses, rb.train_losses);
    assert_eq!(a.weights(), b.weights());
    assert!(ra.final_loss <= ra.initial_loss);
}

#[test]
fn learns_a_linear_map() {
    let x = sequence(4, 120, 3);
    let w = Matrix::from_rows(&[[0.5, -1.0], [2.0, 0.3], [-0.7, 1.1]]);
    let y = x.matmul(&w).unwrap();
    let mut cfg = TcnConfig::new(3, 2);
    cfg.channels = vec![8];
    cfg.dilations = vec![1];
    cfg.kernel_size = 2;
    cfg.activation = Activation::Linear;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 2000;
    cfg.patience = 0;
    cfg.validation_fraction = 0.0;
    let mut model = TcnModel::new(cfg).unwrap();
    let report = model.train(&x, &y).unwrap();
    // standardized targets have unit variance
    assert!(report.final_loss < 1e-4, "loss {:e}", report.final_loss);
}

#[test]
fn one_step_forecast_is_last_forward_output() {
    let x = sequence(5, 30, 3);
    let y = sequence(6, 29, 2);
    let mut cfg = small_config(3, 2);
    cfg.epochs = 3;
    let mut model = TcnModel::new(cfg).unwrap();
    model.train(&head(&x, 29), &y).unwrap();
    let f = model.forecast(&x, &y).unwrap();
    let full = model.forward(&x).unwrap();
    assert_eq!(f.rows(), 1);
    assert_eq!(f.row(0), full.row(29));

    let none = model.forecast(&head(&x, 29), &y).unwrap();
    assert_eq!(none.rows(), 0);

    let tensor = model.predict(&x, &y, &[2, 1]).unwrap();
    assert_eq!(tensor.shape(), &[2, 1]);
    assert_eq!(tensor.data(), full.row(29));
}

#[test]
fn lagged_forecast_feeds_back_predictions() {
    let x = sequence(7, 30, 3);
    let y = sequence(8, 25, 2);
    let mut cfg = small_config(3, 2);
    cfg.epochs = 3;
    cfg.use_lagged_response = true;
    let mut model = TcnModel::new(cfg).unwrap();
    model.train(&head(&x, 25), &y).unwrap();
    let f = model.forecast(&x, &y).unwrap();
    assert_eq!(f.rows(), 5);

    // step-by-step oracle: append each prediction as the next lag
    let mut observed = y.clone();
    for h in 0..5 {
        let step = model.forecast(&head(&x, 26 + h), &observed).unwrap();
        assert_eq!(step.row(0), f.row(h));
        let mut rows: Vec<Vec<f64>> = (0..observed.rows())
            .map(|t| observed.row(t).to_vec())
            .collect();
        rows.push(step.row(0).to_vec());
        observed = Matrix::from_rows(&rows);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let x = sequence(9, 25, 3);
    let y = sequence(10, 25, 2);
    // a linear network is affine in each single weight, so the central
    // difference is exact for any step and a wide one limits roundoff
    for (activation, eps, bound) in [
        (Activation::Relu, 1e-5, 1e-4),
        (Activation::Linear, 1e-2, 1e-7),
    ] {
        let mut cfg = small_config(3, 2);
        cfg.activation = activation;
        let mut model = TcnModel::new(cfg).unwrap();
        let r = model.grad_check(&x, &y, eps, 200, 0).unwrap();
        assert!(
            r.checked >= 200 && r.max_relative_error < bound,
            "{activation:?} {r:?}"
        );
        model.optimizer_steps(&x, &y, 10).unwrap();
        let r = model.grad_check(&x, &y, eps, 200, 1).unwrap();
        assert!(r.max_relative_error < bound, "{activation:?} trained {r:?}");
    }
}

#[test]
fn rejects_bad_input() {
    let mut model = TcnModel::new(small_config(3, 2)).unwrap();
    assert!(model.forward(&Matrix::zeros(4, 2)).is_err());
    let mut x = sequence(11, 10, 3);
    x.set(3, 1, f64::NAN);
    assert!(model.train(&x, &sequence(12, 10, 2)).is_err());
    assert!(model
        .train(&Matrix::zeros(0, 3), &Matrix::zeros(0, 2))
        .is_err());
}
