//! Multilinear algebra over [`DenseTensor`].
//!
//! Mode indices are zero-based: mode `k` of an order-K tensor satisfies
//! `k < K`.
//!
//! # Unfolding convention
//!
//! `matricize(t, k)` places mode `k` on the rows. The remaining modes index
//! the columns in cyclic order `k+1, k+2, ..., K-1, 0, ..., k-1`, with the
//! first of them varying fastest. For an order-3 tensor with dimensions
//! `(m1, m2, m3)` and one-based indices this gives
//!
//! ```text
//! mat_1(A)[i, j + m2 (k - 1)] = mat_2(A)[j, k + m3 (i - 1)] = mat_3(A)[k, i + m1 (j - 1)] = A[i, j, k]
//! ```
//!
//! The same cyclic rule is used for every order, including K >= 4.
//!
//! # Vectorization convention
//!
//! `vectorize` reads `mat_0(t)` column by column, which is the same as
//! stacking entries with the first index varying fastest.

use super::dense::increment;
use super::{DenseTensor, Matrix, TensorError};

fn check_mode(t: &DenseTensor, mode: usize) -> Result<(), TensorError> {
    if mode >= t.order() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: t.order(),
        });
    }
    Ok(())
}

/// Column strides of the mode-`mode` unfolding, indexed by tensor mode.
fn unfolding_strides(shape: &[usize], mode: usize) -> Vec<usize> {
    let order = shape.len();
    let mut strides = vec![0usize; order];
    let mut stride = 1;
    for step in 1..order {
        let m = (mode + step) % order;
        strides[m] = stride;
        stride *= shape[m];
    }
    strides
}

/// Mode-`mode` unfolding into a `d_mode x prod_{j != mode} d_j` matrix.
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<Matrix, TensorError> {
    check_mode(t, mode)?;
    let shape = t.shape();
    let rows = shape[mode];
    let cols = t.len() / rows;
    let strides = unfolding_strides(shape, mode);
    let mut out = Matrix::zeros(rows, cols);
    let mut idx = vec![0usize; shape.len()];
    for &v in t.data() {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out.set(idx[mode], col, v);
        increment(&mut idx, shape);
    }
    Ok(out)
}

/// Inverse of [`matricize`]: folds a mode-`mode` unfolding back into `shape`.
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor, TensorError> {
    if mode >= shape.len() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: shape.len(),
        });
    }
    let total: usize = shape.iter().product();
    if m.rows() != shape[mode] || m.rows() * m.cols() != total {
        return Err(TensorError::DimensionMismatch(format!(
            "cannot fold {}x{} into {:?} along mode {}",
            m.rows(),
            m.cols(),
            shape,
            mode
        )));
    }
    let strides = unfolding_strides(shape, mode);
    let mut idx = vec![0usize; shape.len()];
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        data.push(m.get(idx[mode], col));
        increment(&mut idx, shape);
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Mode-`mode` product `t ×_mode m` where `m` is `d' x d_mode`.
///
/// Satisfies `mat_mode(t ×_mode m) = m · mat_mode(t)`.
pub fn mode_multiply(t: &DenseTensor, m: &Matrix, mode: usize) -> Result<DenseTensor, TensorError> {
    check_mode(t, mode)?;
    let shape = t.shape();
    let dk = shape[mode];
    if m.cols() != dk {
        return Err(TensorError::DimensionMismatch(format!(
            "mode-{} product: matrix has {} columns but tensor dimension is {}",
            mode,
            m.cols(),
            dk
        )));
    }
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    let new_dk = m.rows();
    let mut out_shape = shape.to_vec();
    out_shape[mode] = new_dk;
    let src = t.data();
    let mut out = vec![0.0; left * new_dk * right];
    for l in 0..left {
        let src_block = &src[l * dk * right..(l + 1) * dk * right];
        let dst_block = &mut out[l * new_dk * right..(l + 1) * new_dk * right];
        for a in 0..new_dk {
            let dst = &mut dst_block[a * right..(a + 1) * right];
            for (i, &w) in m.row(a).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let s = &src_block[i * right..(i + 1) * right];
                for (d, &x) in dst.iter_mut().zip(s) {
                    *d += w * x;
                }
            }
        }
    }
    DenseTensor::new(out_shape, out)
}

/// Applies a set of mode products on distinct modes.
pub fn multi_mode_multiply(
    t: &DenseTensor,
    products: &[(&Matrix, usize)],
) -> Result<DenseTensor, TensorError> {
    let mut seen = vec![false; t.order()];
    for &(m, mode) in products {
        check_mode(t, mode)?;
        if seen[mode] {
            return Err(TensorError::RepeatedMode(mode));
        }
        seen[mode] = true;
        if m.cols() != t.shape()[mode] {
            return Err(TensorError::DimensionMismatch(format!(
                "mode-{} product: matrix has {} columns but tensor dimension is {}",
                mode,
                m.cols(),
                t.shape()[mode]
            )));
        }
    }
    let mut out = t.clone();
    for &(m, mode) in products {
        out = mode_multiply(&out, m, mode)?;
    }
    Ok(out)
}

/// `t ×_0 ms[0]^T ×_1 ms[1]^T ...`, i.e. projection onto the loadings.
pub fn project_all_modes(t: &DenseTensor, ms: &[Matrix]) -> Result<DenseTensor, TensorError> {
    if ms.len() != t.order() {
        return Err(TensorError::DimensionMismatch(format!(
            "{} matrices for an order-{} tensor",
            ms.len(),
            t.order()
        )));
    }
    let mut out = t.clone();
    for (mode, m) in ms.iter().enumerate() {
        out = mode_multiply(&out, &m.transpose(), mode)?;
    }
    Ok(out)
}

/// `t ×_0 ms[0] ×_1 ms[1] ...`.
pub fn embed_all_modes(t: &DenseTensor, ms: &[Matrix]) -> Result<DenseTensor, TensorError> {
    if ms.len() != t.order() {
        return Err(TensorError::DimensionMismatch(format!(
            "{} matrices for an order-{} tensor",
            ms.len(),
            t.order()
        )));
    }
    let mut out = t.clone();
    for (mode, m) in ms.iter().enumerate() {
        out = mode_multiply(&out, m, mode)?;
    }
    Ok(out)
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.frobenius_norm()
}

/// Entries with the first index varying fastest.
pub fn vectorize(t: &DenseTensor) -> Vec<f64> {
    let shape = t.shape();
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; shape.len()];
    for &v in t.data() {
        out[column_major_offset(&idx, shape)] = v;
        increment(&mut idx, shape);
    }
    out
}

/// Inverse of [`vectorize`].
pub fn unvectorize(shape: &[usize], v: &[f64]) -> Result<DenseTensor, TensorError> {
    let expected: usize = shape.iter().product();
    if v.len() != expected {
        return Err(TensorError::DataLength {
            expected,
            actual: v.len(),
        });
    }
    Ok(DenseTensor::from_fn(shape, |idx| {
        v[column_major_offset(idx, shape)]
    }))
}

fn column_major_offset(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter()
        .zip(shape)
        .rev()
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Tensor (outer) product; the result has shape `a.shape ++ b.shape`.
pub fn outer_product(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let mut shape = a.shape().to_vec();
    shape.extend_from_slice(b.shape());
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &x in a.data() {
        data.extend(b.data().iter().map(|&y| x * y));
    }
    DenseTensor::new(shape, data).expect("outer product shape")
}

/// `⟦M_1, ..., M_L⟧ = Σ_r m_{1r} ∘ ... ∘ m_{Lr}` for matrices sharing a
/// column count.
pub fn cp_from_factors(ms: &[Matrix]) -> Result<DenseTensor, TensorError> {
    let first = ms.first().ok_or_else(|| {
        TensorError::DimensionMismatch("cp_from_factors needs at least one matrix".into())
    })?;
    let rank = first.cols();
    if let Some(bad) = ms.iter().find(|m| m.cols() != rank) {
        return Err(TensorError::ColumnCountMismatch {
            expected: rank,
            actual: bad.cols(),
        });
    }
    let shape: Vec<usize> = ms.iter().map(|m| m.rows()).collect();
    let mut acc = DenseTensor::zeros(&shape);
    let mut term = Vec::new();
    for r in 0..rank {
        term.clear();
        term.push(1.0);
        for m in ms {
            let col = m.column(r);
            let mut next = Vec::with_capacity(term.len() * col.len());
            for &x in &term {
                next.extend(col.iter().map(|&c| x * c));
            }
            term = next;
        }
        for (a, t) in acc.data_mut().iter_mut().zip(&term) {
            *a += t;
        }
    }
    Ok(acc)
}

/// Contracted product `⟨a, b⟩_L` over the trailing `contracted` modes of `a`
/// and the leading `contracted` modes of `b`.
pub fn contracted_product(
    a: &DenseTensor,
    b: &DenseTensor,
    contracted: usize,
) -> Result<DenseTensor, TensorError> {
    if contracted > a.order() || contracted > b.order() {
        return Err(TensorError::ContractionMismatch {
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
            contracted,
        });
    }
    let a_split = a.order() - contracted;
    if a.shape()[a_split..] != b.shape()[..contracted] {
        return Err(TensorError::ContractionMismatch {
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
            contracted,
        });
    }
    let inner: usize = b.shape()[..contracted].iter().product();
    let outer_a = a.len() / inner;
    let outer_b = b.len() / inner;
    let am = Matrix::from_vec(outer_a, inner, a.data().to_vec())?;
    let bm = Matrix::from_vec(inner, outer_b, b.data().to_vec())?;
    let prod = am.matmul(&bm)?;
    let mut shape = a.shape()[..a_split].to_vec();
    shape.extend_from_slice(&b.shape()[contracted..]);
    DenseTensor::new(shape, prod.into_data())
}
