//! Simulated tensor-on-tensor data.
//!
//! Factors follow a tensor VAR(1), `vec(F_t) = Φ vec(F_{t-1}) + vec(W_t)`,
//! with `Φ = Q_1 ⊗ ... ⊗ Q_K` built from QR-orthonormalized Gaussian
//! matrices. Covariates are `X_t = λ F_t ×_k A_k + E_t` and responses are
//! `Y_t = ⟨s(F_t), Λ⟩ + U_t` with a CP-structured coefficient tensor `Λ`.
//!
//! Each random component draws from its own seeded stream, so growing `n`
//! with the same seed extends a dataset instead of resampling it.
//!
//! Note that the default `ρ = 1` makes every eigenvalue of `Φ` unit
//! modulus, so the VAR is not strictly stationary and the factor variance
//! keeps growing after the burn-in. Set `rho < 1` when stationarity
//! matters.

use thiserror::Error;

use crate::factor::{FactorError, LoadingSet};
use crate::rng::{normal_matrix, standard_normal, stream_rng, streams};
use crate::spectral::{qr_orthonormalize, SpectralError};
use crate::tensor::{
    contracted_product, cp_from_factors, embed_all_modes, kronecker, unvectorize, vectorize,
    DenseTensor, Matrix, TensorError, TensorSeries,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// `log|z|` at `z = 0` evaluates to `ln(LOG_ABS_FLOOR)`.
pub const LOG_ABS_FLOOR: f64 = 1e-300;

/// Entrywise response transform `s(·)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    Cos,
    LogAbs,
    Softplus,
    /// Linear responses; used by tests and noiseless sanity runs.
    Identity,
}

impl Transform {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Transform::Cos => z.cos(),
            Transform::LogAbs => z.abs().max(LOG_ABS_FLOOR).ln(),
            Transform::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Transform::Identity => z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transform::Cos => "cos",
            Transform::LogAbs => "log-abs",
            Transform::Softplus => "softplus",
            Transform::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cos" => Some(Transform::Cos),
            "log-abs" | "logabs" | "log" => Some(Transform::LogAbs),
            "softplus" => Some(Transform::Softplus),
            "identity" | "linear" => Some(Transform::Identity),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub response_dims: Vec<usize>,
    pub n: usize,
    pub transform: Transform,
    /// Variance of the response noise `U_t`; zero disables it.
    pub sigma_u2: f64,
    /// CP rank of `Λ`.
    pub cp_rank: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Scale applied to `Φ`, in `(0, 1]`.
    pub rho: f64,
    /// Signal-to-noise scalar; `None` means `sqrt(prod r_k)`.
    pub lambda: Option<f64>,
    /// Draw the VAR innovations `W_t`; when off the factors evolve
    /// deterministically from the random start.
    pub factor_innovations: bool,
    /// Add the idiosyncratic covariate noise `E_t`.
    pub covariate_noise: bool,
}

impl SimConfig {
    fn base(
        dims: &[usize],
        ranks: &[usize],
        response_dims: &[usize],
        n: usize,
        transform: Transform,
        sigma_u2: f64,
        seed: u64,
    ) -> Self {
        Self {
            dims: dims.to_vec(),
            ranks: ranks.to_vec(),
            response_dims: response_dims.to_vec(),
            n,
            transform,
            sigma_u2,
            cp_rank: 6,
            burn_in: 500,
            seed,
            rho: 1.0,
            lambda: None,
            factor_innovations: true,
            covariate_noise: true,
        }
    }

    /// d = (25, 25, 12), r = (3, 3, 2), p = (6, 8, 6), n = 500, cos, σ_u² = 1.
    pub fn config1(seed: u64) -> Self {
        Self::base(
            &[25, 25, 12],
            &[3, 3, 2],
            &[6, 8, 6],
            500,
            Transform::Cos,
            1.0,
            seed,
        )
    }

    /// d = (30, 6, 12), r = (6, 3, 2), p = (8, 6, 4), n = 400, log|z|, σ_u² = 1.
    pub fn config2(seed: u64) -> Self {
        Self::base(
            &[30, 6, 12],
            &[6, 3, 2],
            &[8, 6, 4],
            400,
            Transform::LogAbs,
            1.0,
            seed,
        )
    }

    /// d = (12, 3, 12), r = (4, 3, 4), p = (3, 3, 3), n = 100, softplus, σ_u² = 0.5.
    pub fn config3(seed: u64) -> Self {
        Self::base(
            &[12, 3, 12],
            &[4, 3, 4],
            &[3, 3, 3],
            100,
            Transform::Softplus,
            0.5,
            seed,
        )
    }

    /// One of the three reference configurations by number.
    pub fn preset(index: usize, seed: u64) -> Option<Self> {
        match index {
            1 => Some(Self::config1(seed)),
            2 => Some(Self::config2(seed)),
            3 => Some(Self::config3(seed)),
            _ => None,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
            .unwrap_or_else(|| (self.ranks.iter().product::<usize>() as f64).sqrt())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.dims.is_empty() || self.dims.len() != self.ranks.len() {
            return bad(format!(
                "dims {:?} and ranks {:?} must be nonempty and of equal length",
                self.dims, self.ranks
            ));
        }
        if let Some((d, r)) = self
            .dims
            .iter()
            .zip(&self.ranks)
            .find(|(&d, &r)| r == 0 || r > d)
        {
            return bad(format!("rank {r} must lie in 1..={d}"));
        }
        if self.response_dims.is_empty() || self.response_dims.contains(&0) {
            return bad(format!(
                "response dims {:?} must be positive",
                self.response_dims
            ));
        }
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        if !(self.sigma_u2 >= 0.0) || !self.sigma_u2.is_finite() {
            return bad(format!(
                "sigma_u2 = {} must be finite and nonnegative",
                self.sigma_u2
            ));
        }
        if self.cp_rank == 0 {
            return bad("cp_rank must be positive".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho = {} must lie in (0, 1]", self.rho));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return bad(format!("lambda = {l} must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// A generated dataset together with its ground truth.
#[derive(Clone, Debug)]
pub struct SimDataset {
    pub config: SimConfig,
    pub covariates: TensorSeries,
    pub responses: TensorSeries,
    pub true_loadings: LoadingSet,
    pub true_factors: TensorSeries,
    pub lambda: f64,
    /// Coefficient tensor `Λ` of shape `ranks ++ response_dims`.
    pub coefficients: DenseTensor,
    /// VAR transition matrix `Φ`.
    pub transition: Matrix,
}

/// `Φ = ρ (Q_1 ⊗ ... ⊗ Q_K)` with each `Q_k` an orthonormalized
/// `r_k x r_k` Gaussian draw.
pub fn make_phi(ranks: &[usize], rho: f64, seed: u64) -> Result<Matrix, SimError> {
    let mut rng = stream_rng(seed, streams::TRANSITION);
    let mut phi = Matrix::identity(1);
    for &r in ranks {
        let q = qr_orthonormalize(&normal_matrix(&mut rng, r, r))?;
        phi = kronecker(&phi, &q);
    }
    Ok(phi.scale(rho))
}

/// Runs the VAR for `burn_in + n` steps from a standard normal start and
/// keeps the last `n` states.
pub fn gen_factor_series(config: &SimConfig) -> Result<TensorSeries, SimError> {
    config.validate()?;
    let phi = make_phi(&config.ranks, config.rho, config.seed)?;
    factor_series_with(config, &phi)
}

fn factor_series_with(config: &SimConfig, phi: &Matrix) -> Result<TensorSeries, SimError> {
    let mut rng = stream_rng(config.seed, streams::INNOVATIONS);
    let width = phi.rows();
    let mut state: Vec<f64> = (0..width).map(|_| standard_normal(&mut rng)).collect();
    let mut items = Vec::with_capacity(config.n);
    for step in 0..config.burn_in + config.n {
        let mut next = phi.matvec(&state)?;
        if config.factor_innovations {
            for v in next.iter_mut() {
                *v += standard_normal(&mut rng);
            }
        }
        state = next;
        if step >= config.burn_in {
            items.push(unvectorize(&config.ranks, &state)?);
        }
    }
    Ok(TensorSeries::new(config.ranks.clone(), items)?)
}

/// Draws loadings (Gaussian, then QR) and embeds the factors:
/// `X_t = λ F_t ×_k A_k + E_t`.
pub fn gen_covariates(
    factors: &TensorSeries,
    config: &SimConfig,
) -> Result<(TensorSeries, LoadingSet), SimError> {
    config.validate()?;
    if factors.shape() != config.ranks.as_slice() {
        return Err(SimError::InvalidConfig(format!(
            "factor shape {:?} does not match ranks {:?}",
            factors.shape(),
            config.ranks
        )));
    }
    let mut load_rng = stream_rng(config.seed, streams::LOADINGS);
    let loadings = config
        .dims
        .iter()
        .zip(&config.ranks)
        .map(|(&d, &r)| qr_orthonormalize(&normal_matrix(&mut load_rng, d, r)))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda = config.lambda();
    let mut noise_rng = stream_rng(config.seed, streams::COVARIATE_NOISE);
    let mut items = Vec::with_capacity(factors.len());
    for f in factors {
        let mut x = embed_all_modes(f, &loadings)?.scale(lambda);
        if config.covariate_noise {
            for v in x.data_mut() {
                *v += standard_normal(&mut noise_rng);
            }
        }
        items.push(x);
    }
    let covariates = TensorSeries::new(config.dims.clone(), items)?;
    Ok((covariates, LoadingSet::new(loadings)?))
}

/// `Λ = ⟦U_1, ..., U_K, V_1, ..., V_q⟧` with standard normal factor matrices
/// of `cp_rank` columns.
pub fn make_coefficients(config: &SimConfig) -> Result<DenseTensor, SimError> {
    let mut rng = stream_rng(config.seed, streams::COEFFICIENTS);
    let mats: Vec<Matrix> = config
        .ranks
        .iter()
        .chain(&config.response_dims)
        .map(|&rows| normal_matrix(&mut rng, rows, config.cp_rank))
        .collect();
    Ok(cp_from_factors(&mats)?)
}

/// `Y_t = ⟨s(F_t), Λ⟩ + U_t`, `U_t` entries i.i.d. `N(0, σ_u²)`.
pub fn gen_responses(
    factors: &TensorSeries,
    config: &SimConfig,
) -> Result<(TensorSeries, DenseTensor), SimError> {
    config.validate()?;
    let coefficients = make_coefficients(config)?;
    let contracted = config.ranks.len();
    let sigma_u = config.sigma_u2.sqrt();
    let mut rng = stream_rng(config.seed, streams::RESPONSE_NOISE);
    let mut items = Vec::with_capacity(factors.len());
    for f in factors {
        let transformed = f.map(|z| config.transform.apply(z));
        let mut y = contracted_product(&transformed, &coefficients, contracted)?;
        if sigma_u > 0.0 {
            for v in y.data_mut() {
                *v += sigma_u * standard_normal(&mut rng);
            }
        }
        items.push(y);
    }
    let responses = TensorSeries::new(config.response_dims.clone(), items)?;
    Ok((responses, coefficients))
}

/// Full pipeline: factors, covariates and responses from one config.
pub fn generate(config: &SimConfig) -> Result<SimDataset, SimError> {
    config.validate()?;
    let transition = make_phi(&config.ranks, config.rho, config.seed)?;
    let true_factors = factor_series_with(config, &transition)?;
    let (covariates, true_loadings) = gen_covariates(&true_factors, config)?;
    let (responses, coefficients) = gen_responses(&true_factors, config)?;
    Ok(SimDataset {
        config: config.clone(),
        covariates,
        responses,
        true_loadings,
        true_factors,
        lambda: config.lambda(),
        coefficients,
        transition,
    })
}

/// Column-major vectorizations of a factor series, one row per step.
pub fn vectorized_rows(series: &TensorSeries) -> Matrix {
    let width = series.slice_len();
    let mut data = Vec::with_capacity(series.len() * width);
    for f in series {
        data.extend(vectorize(f));
    }
    Matrix::from_vec(series.len(), width, data).expect("consistent widths")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::extract_factors;
    use crate::spectral::svd;

    #[test]
    fn unit_ranks_give_signed_scalar_phi() {
        let phi = make_phi(&[1, 1, 1], 0.8, 3).unwrap();
        assert_eq!(phi.shape(), (1, 1));
        assert!((phi.get(0, 0).abs() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn phi_singular_values_equal_rho() {
        for rho in [1.0, 0.8] {
            let phi = make_phi(&[4, 3, 4], rho, 17).unwrap();
            for s in svd(&phi).unwrap().singular_values {
                assert!((s - rho).abs() < 1e-10);
            }
        }
        assert_eq!(
            make_phi(&[2, 3], 1.0, 5).unwrap(),
            make_phi(&[2, 3], 1.0, 5).unwrap()
        );
    }

    #[test]
    fn no_innovation_preserves_norm() {
        let mut cfg = SimConfig::config3(4);
        cfg.factor_innovations = false;
        let f = gen_factor_series(&cfg).unwrap();
        let first = f.get(0).frobenius_norm();
        for x in &f {
            assert!((x.frobenius_norm() - first).abs() < 1e-10 * first.max(1.0));
        }
    }

    #[test]
    fn softplus_bounds_on_large_negative_inputs() {
        for z in [-5.0, -20.0, -40.0, -700.0] {
            let s = Transform::Softplus.apply(z);
            assert!(s >= 0.0);
            assert!(s <= z.exp() * (1.0 + 1e-12));
        }
        assert!((Transform::Softplus.apply(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((Transform::Softplus.apply(50.0) - 50.0).abs() < 1e-15);
    }

    #[test]
    fn log_abs_at_zero_is_floored() {
        let v = Transform::LogAbs.apply(0.0);
        assert!(v.is_finite());
        assert_eq!(v, LOG_ABS_FLOOR.ln());
        assert_eq!(Transform::LogAbs.apply(-std::f64::consts::E), 1.0);
    }

    #[test]
    fn noiseless_covariates_invert_exactly() {
        let mut cfg = SimConfig::config3(8);
        cfg.covariate_noise = false;
        let f = gen_factor_series(&cfg).unwrap();
        let (x, loadings) = gen_covariates(&f, &cfg).unwrap();
        let back = extract_factors(&x, &loadings).unwrap();
        for (a, b) in back.iter().zip(&f) {
            let rec = a.scale(1.0 / cfg.lambda());
            assert!(rec.sub(b).unwrap().frobenius_norm() <= 1e-10 * b.frobenius_norm());
        }
    }

    #[test]
    fn reference_configs_have_expected_shapes() {
        let c1 = SimConfig::config1(0);
        assert_eq!(c1.dims, vec![25, 25, 12]);
        assert!((c1.lambda() - 18f64.sqrt()).abs() < 1e-15);
        let c3 = SimConfig::config3(0);
        assert_eq!(c3.response_dims, vec![3, 3, 3]);
        assert_eq!(c3.sigma_u2, 0.5);
        assert!(SimConfig::preset(4, 0).is_none());
    }

    #[test]
    fn validate_rejects_bad_ranks() {
        let mut cfg = SimConfig::config3(0);
        cfg.ranks = vec![13, 3, 4];
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig(_))));
        let mut cfg = SimConfig::config3(0);
        cfg.n = 1;
        assert!(cfg.validate().is_err());
    }
}
