mod common;

use common::*;
use fattnn::harness::*;
use fattnn::tensor::TensorSeries;
use fattnn::{generate, Error, FormatError};
use proptest::prelude::*;

fn dataset(extra: &str) -> (ExperimentConfig, Dataset) {
    let cfg = ExperimentConfig::from_text(extra).unwrap();
    let data = Dataset::from(&generate(&cfg.sim_config()).unwrap());
    (cfg, data)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

proptest! {
    #[test]
    fn mse_matches_double_loop(seed in 0u64..10_000, n in 1usize..12) {
        let mut g = rng(seed);
        let shape = random_shape(&mut g, 24);
        let a: Vec<_> = (0..n).map(|_| random_tensor(&mut g, &shape)).collect();
        let b: Vec<_> = (0..n).map(|_| random_tensor(&mut g, &shape)).collect();
        let mut total = 0.0;
        let mut count = 0.0;
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.data().iter().zip(y.data()) {
                total += (u - v) * (u - v);
                count += 1.0;
            }
        }
        let a = TensorSeries::new(shape.clone(), a).unwrap();
        let b = TensorSeries::new(shape, b).unwrap();
        prop_assert!((mse(&a, &b).unwrap() - total / count).abs() < 1e-12);
    }

    #[test]
    fn interval_brackets_mean(seed in 0u64..10_000, n in 2usize..60) {
        let mut g = rng(seed);
        let errors: Vec<f64> = random_matrix(&mut g, n, 1).data().iter().map(|v| v * v).collect();
        let (lo, hi) = bootstrap_ci(&errors, 100, 0.95, seed).unwrap();
        let m = mean(&errors);
        prop_assert!(lo <= m + 1e-12 && m <= hi + 1e-12);
    }
}

#[test]
fn split_examples() {
    let (_, data) = dataset("n = 100");
    let (train, test) = split(&data, 0.7).unwrap();
    assert_eq!((train.len(), test.len()), (70, 30));
    let (train, test) = split(&data, 0.8).unwrap();
    assert_eq!((train.len(), test.len()), (80, 20));
    assert!(matches!(split(&data, 1.0), Err(Error::Config(_))));
}

#[test]
fn series_file_round_trip_and_fixtures() {
    let (_, data) = dataset("n = 12");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.fatt");
    data.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = Dataset::load(&path).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.to_bytes(), bytes);

    let mut magic = bytes.clone();
    magic[0] = b'X';
    let mut short = bytes.clone();
    short.truncate(bytes.len() - 8);
    let mut endian = bytes.clone();
    endian[5] = DTYPE_F64_BE;
    let errors: Vec<FormatError> = [magic, short, endian]
        .iter()
        .map(|b| Dataset::from_bytes(b).unwrap_err())
        .collect();
    assert!(matches!(errors[0], FormatError::BadMagic { .. }));
    assert!(matches!(
        errors[1],
        FormatError::PayloadLengthMismatch { .. }
    ));
    assert!(matches!(errors[2], FormatError::ForeignEndian(_)));
    let codes: std::collections::BTreeSet<_> = errors.iter().map(|e| e.code()).collect();
    assert_eq!(codes.len(), 3);
}

#[test]
fn input_widths() {
    let (cfg, data) = dataset("n = 30\nepochs = 2");
    let f = run_fattnn(&data, &cfg).unwrap();
    let r = run_raw_tcn_baseline(&data, &cfg).unwrap();
    assert_eq!(f.input_width, 48);
    assert_eq!(r.input_width, 432);
    assert_eq!(f.ranks.as_deref(), Some(&[4, 3, 4][..]));
    assert_eq!((f.n_train, f.n_test), (21, 9));
    assert_eq!(f.predicted.shape(), (9, 27));
}

#[test]
fn runs_are_reproducible() {
    let (cfg, data) = dataset("n = 40\nepochs = 5\nseed = 7");
    let a = run_fattnn(&data, &cfg).unwrap();
    let b = run_fattnn(&data, &cfg).unwrap();
    assert_eq!(a.mse.to_bits(), b.mse.to_bits());
    assert_eq!(a.ci, b.ci);
    assert_eq!(a.predicted, b.predicted);
}

#[test]
fn report_echoes_config() {
    let (cfg, data) = dataset("n = 30\nepochs = 2\nseed = 4");
    let text = run_fattnn(&data, &cfg).unwrap().to_text();
    assert!(text.contains("method=fattnn"));
    assert!(text.contains("config.seed=4"));
    assert!(text.contains("bootstrap_reps=100"));
    let again = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
    assert_eq!(again.to_text(), cfg.to_text());
}

#[test]
fn test_range_cannot_leak_into_training() {
    let (cfg, mut data) = dataset("n = 40\nepochs = 3");
    let k = train_len(data.len(), cfg.split_ratio).unwrap();
    let poisoned = data
        .covariates
        .map(
            data.covariates.shape().to_vec(),
            |x| Ok(x.map(|_| f64::NAN)),
        )
        .unwrap();
    let mut items = data.covariates.items()[..k].to_vec();
    items.extend(poisoned.items()[k..].iter().cloned());
    data.covariates = TensorSeries::new(data.covariates.shape().to_vec(), items).unwrap();

    // factorization and training only read the training range
    let stage = fit_factor_stage(&cfg, &data.covariates.slice(0..k)).unwrap();
    assert!(stage
        .factor_rows(&data.covariates.slice(0..k))
        .unwrap()
        .is_finite());

    let err = run_fattnn(&data, &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
}

#[test]
fn forecasts_beat_last_value() {
    let mut ours = Vec::new();
    let mut naive = Vec::new();
    for seed in 0..5 {
        let (cfg, data) = dataset(&format!("seed = {seed}"));
        ours.push(run_fattnn(&data, &cfg).unwrap().mse);
        naive.push(last_value_mse(&data, cfg.split_ratio).unwrap());
    }
    assert!(mean(&ours) < mean(&naive), "{ours:?} vs {naive:?}");
}

#[test]
fn training_beats_untrained_network() {
    let mut trained = Vec::new();
    let mut untrained = Vec::new();
    for seed in 0..5 {
        let (cfg, data) = dataset(&format!("seed = {seed}"));
        trained.push(run_fattnn(&data, &cfg).unwrap().mse);
        let mut frozen = cfg.clone();
        frozen.set("epochs", "1").unwrap();
        frozen.set("learning_rate", "1e-12").unwrap();
        untrained.push(run_fattnn(&data, &frozen).unwrap().mse);
    }
    let ratio = mean(&trained) / mean(&untrained);
    assert!(ratio < 0.75, "trained / untrained = {ratio}");
}

#[test]
fn noiseless_linear_pipeline() {
    let (cfg, data) = dataset(
        "rho = 0.8\ntransform = identity\nsigma_u2 = 0\ncovariate_noise = false\n\
         activation = linear\nn = 400\nchannels = 16\ndilations = 1\nkernel_size = 2\n\
         learning_rate = 0.01\nepochs = 3000\npatience = 0\n",
    );
    let r = run_fattnn(&data, &cfg).unwrap();
    assert!(r.mse < 1e-2, "mse {}", r.mse);
}
