use super::{embed_all_modes, matricize, project_all_modes, DenseTensor, Matrix, TensorError};
use crate::spectral::{self, SpectralError};

/// Tucker decomposition `core ×_1 U_1 ... ×_K U_K` with orthonormal factors.
#[derive(Clone, Debug)]
pub struct TuckerDecomp {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerDecomp {
    /// Validates shapes and factor orthonormality (within `1e-10`).
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self, TensorError> {
        if factors.len() != core.order() {
            return Err(TensorError::DimensionMismatch(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (k, (u, &r)) in factors.iter().zip(core.shape()).enumerate() {
            if u.cols() != r {
                return Err(TensorError::DimensionMismatch(format!(
                    "factor {} has {} columns, core dimension is {}",
                    k,
                    u.cols(),
                    r
                )));
            }
            let dev = u.orthonormality_error();
            if !(dev <= 1e-10) {
                return Err(TensorError::DimensionMismatch(format!(
                    "factor {k} is not orthonormal (deviation {dev:e})"
                )));
            }
        }
        Ok(Self { core, factors })
    }

    /// Truncated higher-order SVD: `U_k` = top-`r_k` left singular vectors
    /// of `mat_k(t)`, core = `t ×_k U_k^T`.
    pub fn hosvd(t: &DenseTensor, ranks: &[usize]) -> Result<Self, SpectralError> {
        if ranks.len() != t.order() {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} ranks for an order-{} tensor",
                ranks.len(),
                t.order()
            )));
        }
        let factors = ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let unfolded = matricize(t, k).expect("mode in range");
                spectral::top_left_singular_vectors(&unfolded, r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let core = project_all_modes(t, &factors).expect("conformable factors");
        Ok(Self { core, factors })
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    pub fn reconstruct(&self) -> DenseTensor {
        embed_all_modes(&self.core, &self.factors).expect("validated shapes")
    }
}
