mod common;

use common::*;
use fattnn::spectral::*;
use fattnn::tensor::Matrix;
use proptest::prelude::*;

fn orthonormal(seed: u64, rows: usize, cols: usize) -> Matrix {
    qr_orthonormalize(&random_matrix(&mut rng(seed), rows, cols)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sin_theta_symmetric_and_rotation_invariant(seed in 0u64..10_000) {
        let u = orthonormal(seed, 7, 3);
        let v = orthonormal(seed + 1, 7, 3);
        let g = orthonormal(seed + 2, 3, 3);
        let d = sin_theta_distance(&u, &v).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - sin_theta_distance(&v, &u).unwrap()).abs() < 1e-10);
        let ug = u.matmul(&g).unwrap();
        prop_assert!((d - sin_theta_distance(&ug, &v).unwrap()).abs() < 1e-10);
        prop_assert!((d - projector_distance(&u, &v).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn left_subspace_ignores_right_rotation(seed in 0u64..10_000) {
        let m = random_matrix(&mut rng(seed), 6, 9);
        let g = orthonormal(seed + 1, 9, 9);
        let a = top_left_singular_vectors(&m, 3).unwrap();
        let b = top_left_singular_vectors(&m.matmul(&g).unwrap(), 3).unwrap();
        prop_assert!(sin_theta_distance(&a, &b).unwrap() < 1e-8);
    }

    #[test]
    fn qr_columns_orthonormal(seed in 0u64..10_000) {
        let q = orthonormal(seed, 10, 4);
        prop_assert!(q.orthonormality_error() < 1e-12);
    }

    #[test]
    fn eigen_and_svd_reconstruct(seed in 0u64..10_000) {
        let a = random_matrix(&mut rng(seed), 5, 8);
        let s = a.matmul(&a.transpose()).unwrap();
        let e = symmetric_eigen(&s).unwrap();
        let lam = Matrix::from_fn(5, 5, |i, j| if i == j { e.values[i] } else { 0.0 });
        let back = e.vectors.matmul(&lam).unwrap().matmul(&e.vectors.transpose()).unwrap();
        prop_assert!(max_abs_diff(back.data(), s.data()) < 1e-10 * (1.0 + s.max_abs()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let r = svd(&a).unwrap();
        prop_assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
        for (sv, ev) in r.singular_values.iter().zip(&e.values) {
            prop_assert!((sv * sv - ev).abs() < 1e-9 * (1.0 + ev.abs()));
        }
    }
}

#[test]
fn top_subspace_matches_gram_eigenvectors() {
    let m = random_matrix(&mut rng(11), 20, 30);
    let u = top_left_singular_vectors(&m, 5).unwrap();
    let gram = m.matmul(&m.transpose()).unwrap();
    let reference = symmetric_eigen(&gram).unwrap().vectors.leading_columns(5);
    assert!(sin_theta_distance(&u, &reference).unwrap() < 1e-8);
}

#[test]
fn rank_deficient_column_space_recovered() {
    let mut g = rng(12);
    let basis = qr_orthonormalize(&random_matrix(&mut g, 15, 3)).unwrap();
    let m = basis.matmul(&random_matrix(&mut g, 3, 10)).unwrap();
    let u = top_left_singular_vectors(&m, 3).unwrap();
    assert!(sin_theta_distance(&u, &basis).unwrap() < 1e-10);
}

#[test]
fn orthonormal_input_keeps_subspace() {
    let q = orthonormal(13, 8, 3);
    let again = qr_orthonormalize(&q).unwrap();
    assert!(sin_theta_distance(&q, &again).unwrap() < 1e-14);
}

#[test]
fn top_projector_minimizes_residual() {
    let mut g = rng(14);
    let m = random_matrix(&mut g, 8, 12);
    let u = top_left_singular_vectors(&m, 3).unwrap();
    let residual = |p: &Matrix| {
        m.sub(&p.projector().matmul(&m).unwrap())
            .unwrap()
            .frobenius_norm()
    };
    let best = residual(&u);
    for s in 0..50 {
        let other = qr_orthonormalize(&random_matrix(&mut rng(100 + s), 8, 3)).unwrap();
        assert!(best <= residual(&other) + 1e-12);
    }
}

#[test]
fn eigen_ratio_on_exact_low_rank() {
    let mut g = rng(15);
    let m = random_matrix(&mut g, 10, 3)
        .matmul(&random_matrix(&mut g, 3, 10))
        .unwrap();
    let sv = svd(&m).unwrap().singular_values;
    assert_eq!(eigen_ratio_rank(&sv, 6).unwrap(), 3);
}
