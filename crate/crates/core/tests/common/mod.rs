//! Brute-force reference implementations and random fixtures shared by the
//! integration tests. Everything here works from the element-wise
//! definitions, independently of the library's index arithmetic.

#![allow(dead_code)]

use fattnn::rng::{normal_matrix, normal_tensor, stream_rng, Rng};
use fattnn::tensor::{DenseTensor, Matrix};
use rand::Rng as _;

/// Every multi-index of `shape`, first index slowest.
pub fn indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in shape {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..d).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

/// Entry `(i_k, j)` of the mode-k unfolding with
/// `j = Σ_m i_{c_m} Π_{l<m} d_{c_l}` over the cyclic order
/// `c = (k+1, ..., K-1, 0, ..., k-1)`.
pub fn matricize_oracle(t: &DenseTensor, k: usize) -> Matrix {
    let shape = t.shape();
    let order = shape.len();
    let cols: usize = shape
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, d)| d)
        .product();
    let mut m = Matrix::zeros(shape[k], cols);
    for idx in indices(shape) {
        let mut col = 0;
        let mut stride = 1;
        for step in 1..order {
            let mode = (k + step) % order;
            col += idx[mode] * stride;
            stride *= shape[mode];
        }
        m.set(idx[k], col, t.get(&idx));
    }
    m
}

/// `(t ×_k m)_{..j..} = Σ_i t_{..i..} m_{j i}`.
pub fn mode_multiply_oracle(t: &DenseTensor, m: &Matrix, k: usize) -> DenseTensor {
    let mut shape = t.shape().to_vec();
    shape[k] = m.rows();
    DenseTensor::from_fn(&shape, |idx| {
        let mut src = idx.to_vec();
        (0..t.shape()[k])
            .map(|i| {
                src[k] = i;
                t.get(&src) * m.get(idx[k], i)
            })
            .sum()
    })
}

/// Sums over the shared `contracted` modes entry by entry.
pub fn contraction_oracle(a: &DenseTensor, b: &DenseTensor, contracted: usize) -> DenseTensor {
    let split = a.order() - contracted;
    let free_a = &a.shape()[..split];
    let shared = &a.shape()[split..];
    let free_b = &b.shape()[contracted..];
    let mut shape = free_a.to_vec();
    shape.extend_from_slice(free_b);
    if shape.is_empty() {
        shape.push(1);
    }
    let mut out = DenseTensor::zeros(&shape);
    for ia in indices(free_a) {
        for ib in indices(free_b) {
            let mut acc = 0.0;
            for s in indices(shared) {
                let mut xa = ia.clone();
                xa.extend_from_slice(&s);
                let mut xb = s.clone();
                xb.extend_from_slice(&ib);
                acc += a.get(&xa) * b.get(&xb);
            }
            let mut o = ia.clone();
            o.extend_from_slice(&ib);
            if o.is_empty() {
                o.push(0);
            }
            out.set(&o, acc);
        }
    }
    out
}

/// `Σ_r Π_m M_m[i_m, r]`.
pub fn cp_oracle(ms: &[Matrix]) -> DenseTensor {
    let shape: Vec<usize> = ms.iter().map(Matrix::rows).collect();
    let rank = ms[0].cols();
    DenseTensor::from_fn(&shape, |idx| {
        (0..rank)
            .map(|r| {
                ms.iter()
                    .zip(idx)
                    .map(|(m, &i)| m.get(i, r))
                    .product::<f64>()
            })
            .sum()
    })
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Random shape of order 1..=4 with at most `max_len` entries.
pub fn random_shape(rng: &mut Rng, max_len: usize) -> Vec<usize> {
    loop {
        let order = rng.random_range(1..=4);
        let shape: Vec<usize> = (0..order).map(|_| rng.random_range(1..=4)).collect();
        if shape.iter().product::<usize>() <= max_len {
            return shape;
        }
    }
}

pub fn rng(seed: u64) -> Rng {
    stream_rng(seed, 1000)
}

pub fn random_tensor(rng: &mut Rng, shape: &[usize]) -> DenseTensor {
    normal_tensor(rng, shape)
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    normal_matrix(rng, rows, cols)
}
