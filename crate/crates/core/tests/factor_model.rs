mod common;

use common::*;
use fattnn::factor::*;
use fattnn::harness::{loading_errors, max_sin_theta, median};
use fattnn::simgen::SimConfig;
use fattnn::spectral::{qr_orthonormalize, sin_theta_distance};
use fattnn::tensor::{embed_all_modes, frobenius_norm, mode_multiply, Matrix, TensorSeries};
use proptest::prelude::*;

fn noisy_series(seed: u64, n: usize) -> TensorSeries {
    let mut cfg = SimConfig::config3(seed);
    cfg.dims = vec![6, 3, 5];
    cfg.ranks = vec![2, 2, 2];
    cfg.n = n;
    cfg.rho = 0.8;
    fattnn::generate(&cfg).unwrap().covariates
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tipup_rotates_with_the_data(seed in 0u64..1000) {
        let x = noisy_series(seed, 30);
        let ranks = [2, 2, 2];
        let rotations: Vec<Matrix> = x
            .shape()
            .iter()
            .enumerate()
            .map(|(k, &d)| qr_orthonormalize(&random_matrix(&mut rng(seed * 7 + k as u64), d, d)).unwrap())
            .collect();
        let rotated = x
            .map(x.shape().to_vec(), |t| {
                let mut y = t.clone();
                for (k, o) in rotations.iter().enumerate() {
                    y = mode_multiply(&y, o, k)?;
                }
                Ok(y)
            })
            .unwrap();
        let base = tipup_fit(&x, &ranks).unwrap();
        let turned = tipup_fit(&rotated, &ranks).unwrap();
        for (k, o) in rotations.iter().enumerate() {
            let expected = o.matmul(base.get(k)).unwrap();
            prop_assert!(sin_theta_distance(&expected, turned.get(k)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn tipup_ignores_positive_rescaling(seed in 0u64..1000, c in 0.01f64..100.0) {
        let x = noisy_series(seed, 20);
        let scaled = x.map(x.shape().to_vec(), |t| Ok(t.scale(c))).unwrap();
        let a = tipup_fit(&x, &[2, 2, 2]).unwrap();
        let b = tipup_fit(&scaled, &[2, 2, 2]).unwrap();
        prop_assert!(max_sin_theta(&a, &b).unwrap() < 1e-8);
    }

    #[test]
    fn zero_refinements_equal_tipup(seed in 0u64..1000) {
        let x = noisy_series(seed, 20);
        let opts = ItipupOptions { tolerance: 1e-6, max_iter: 0 };
        let fit = itipup_fit(&x, &[2, 2, 2], opts).unwrap();
        prop_assert_eq!(&fit.loadings, &tipup_fit(&x, &[2, 2, 2]).unwrap());
        prop_assert_eq!(fit.iterations_used, 0);
    }

    #[test]
    fn reembedding_never_grows_norm(seed in 0u64..1000) {
        let x = noisy_series(seed, 15);
        let fit = itipup_fit(&x, &[2, 2, 2], ItipupOptions::default()).unwrap();
        let back = reembed(&fit.factors, &fit.loadings).unwrap();
        for (orig, proj) in x.iter().zip(&back) {
            prop_assert!(frobenius_norm(proj) <= frobenius_norm(orig) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn refinement_stops_on_tolerance_or_budget(seed in 0u64..1000) {
        let x = noisy_series(seed, 20);
        let opts = ItipupOptions { tolerance: 1e-6, max_iter: 4 };
        let fit = itipup_fit(&x, &[2, 2, 2], opts).unwrap();
        let change = fit.final_subspace_change.unwrap();
        prop_assert!(change <= 1e-6 || fit.iterations_used == 4);
        for a in fit.loadings.loadings() {
            prop_assert!(a.orthonormality_error() < 1e-10);
        }
    }
}

#[test]
fn refinement_does_not_lose_to_initialization() {
    // stationary factors, the setting the estimator analysis assumes
    let mut tipup = Vec::new();
    let mut itipup = Vec::new();
    for seed in 0..20 {
        let mut cfg = SimConfig::config3(seed);
        cfg.rho = 0.8;
        let (a, b) = loading_errors(&cfg, ItipupOptions::default()).unwrap();
        tipup.push(a);
        itipup.push(b);
    }
    let (mt, mi) = (median(&tipup), median(&itipup));
    assert!(mi <= mt, "itipup {mi:e} vs tipup {mt:e}");
}

#[test]
fn noiseless_matrix_series_rank_recovered() {
    let mut g = rng(21);
    let a = qr_orthonormalize(&random_matrix(&mut g, 7, 2)).unwrap();
    let b = qr_orthonormalize(&random_matrix(&mut g, 6, 2)).unwrap();
    let items = (0..25)
        .map(|_| embed_all_modes(&random_tensor(&mut g, &[2, 2]), &[a.clone(), b.clone()]).unwrap())
        .collect();
    let x = TensorSeries::new(vec![7, 6], items).unwrap();
    assert_eq!(select_ranks(&x, &[5, 5]).unwrap(), vec![2, 2]);
}

#[test]
fn pure_noise_prefers_rank_one() {
    // documented tie-break behaviour on structureless input, not a claim of
    // correctness
    let mut g = rng(22);
    let items = (0..200).map(|_| random_tensor(&mut g, &[6, 5])).collect();
    let x = TensorSeries::new(vec![6, 5], items).unwrap();
    let r = select_ranks(&x, &[4, 4]).unwrap();
    assert!(r.iter().all(|&k| (1..=4).contains(&k)));
}

#[test]
fn noise_free_limit_recovers_loadings() {
    let mut cfg = SimConfig::config3(3);
    cfg.covariate_noise = false;
    let (a, b) = loading_errors(&cfg, ItipupOptions::default()).unwrap();
    assert!(a < 1e-8 && b < 1e-8, "{a:e} {b:e}");
}

#[test]
fn single_mode_is_pca() {
    let mut g = rng(23);
    let items: Vec<_> = (0..40).map(|_| random_tensor(&mut g, &[6])).collect();
    let x = TensorSeries::new(vec![6], items).unwrap();
    let a = tipup_fit(&x, &[2]).unwrap();
    let m = x.to_matrix();
    let second_moment = m.t_matmul(&m).unwrap().scale(1.0 / 40.0);
    let pcs = fattnn::spectral::symmetric_eigen(&second_moment)
        .unwrap()
        .vectors
        .leading_columns(2);
    assert!(sin_theta_distance(a.get(0), &pcs).unwrap() < 1e-8);
}

#[test]
fn errors_are_typed() {
    let x = noisy_series(1, 10);
    assert!(matches!(
        tipup_fit(&x, &[2, 2]),
        Err(FactorError::RankCount { .. })
    ));
    assert!(matches!(
        tipup_fit(&x, &[7, 2, 2]),
        Err(FactorError::RankOutOfRange { .. })
    ));
    let empty = TensorSeries::new(vec![2, 2], vec![]).unwrap();
    assert!(tipup_fit(&empty, &[1, 1]).is_err());
}
