//! Loading-estimation error as a function of sample size and signal scale.

use super::metrics::median;
use crate::factor::{itipup_fit, tipup_fit, ItipupOptions, LoadingSet};
use crate::simgen::{gen_covariates, gen_factor_series, SimConfig};
use crate::spectral::sin_theta_distance;
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct RateStudy {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    /// Multipliers on the default signal scale `sqrt(prod ranks)`.
    pub lambda_scales: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rho: f64,
    pub itipup: ItipupOptions,
}

impl Default for RateStudy {
    fn default() -> Self {
        Self {
            dims: vec![12, 3, 12],
            ranks: vec![4, 3, 4],
            sample_sizes: vec![100, 200, 400],
            lambda_scales: vec![1.0, 4.0],
            seeds: (0..20).collect(),
            rho: 1.0,
            itipup: ItipupOptions::default(),
        }
    }
}

/// Median over seeds of the worst-mode sin-theta error.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub lambda_scale: f64,
    pub median_tipup: f64,
    pub median_itipup: f64,
}

/// `max_k sinΘ(Â_k, A_k)`.
pub fn max_sin_theta(estimate: &LoadingSet, truth: &LoadingSet) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for (a, b) in estimate.loadings().iter().zip(truth.loadings()) {
        worst = worst.max(sin_theta_distance(a, b)?);
    }
    Ok(worst)
}

/// TIPUP and iterative-TIPUP errors on one simulated covariate series.
pub fn loading_errors(config: &SimConfig, options: ItipupOptions) -> Result<(f64, f64), Error> {
    let factors = gen_factor_series(config)?;
    let (x, truth) = gen_covariates(&factors, config)?;
    let tipup = tipup_fit(&x, &config.ranks)?;
    let itipup = itipup_fit(&x, &config.ranks, options)?;
    Ok((
        max_sin_theta(&tipup, &truth)?,
        max_sin_theta(&itipup.loadings, &truth)?,
    ))
}

pub fn run_rate_study(study: &RateStudy) -> Result<Vec<RateRow>, Error> {
    if study.seeds.is_empty() {
        return Err(Error::Config("rate study needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    for &scale in &study.lambda_scales {
        for &n in &study.sample_sizes {
            let mut tipup = Vec::with_capacity(study.seeds.len());
            let mut itipup = Vec::with_capacity(study.seeds.len());
            for &seed in &study.seeds {
                let mut cfg = SimConfig::config3(seed);
                cfg.dims = study.dims.clone();
                cfg.ranks = study.ranks.clone();
                cfg.n = n;
                cfg.rho = study.rho;
                cfg.lambda = Some(cfg.lambda() * scale);
                cfg.validate()?;
                let (a, b) = loading_errors(&cfg, study.itipup)?;
                tipup.push(a);
                itipup.push(b);
            }
            rows.push(RateRow {
                n,
                lambda_scale: scale,
                median_tipup: median(&tipup),
                median_itipup: median(&itipup),
            });
        }
    }
    Ok(rows)
}

/// Whitespace-aligned table with a header line.
pub fn format_rate_table(rows: &[RateRow]) -> String {
    let mut s = format!(
        "{:>6} {:>12} {:>14} {:>14}\n",
        "n", "lambda_scale", "median_tipup", "median_itipup"
    );
    for r in rows {
        s += &format!(
            "{:>6} {:>12} {:>14.6e} {:>14.6e}\n",
            r.n, r.lambda_scale, r.median_tipup, r.median_itipup
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_study_shapes() {
        let study = RateStudy {
            dims: vec![6, 3, 5],
            ranks: vec![2, 2, 2],
            sample_sizes: vec![40, 80],
            lambda_scales: vec![1.0],
            seeds: vec![0, 1, 2],
            ..RateStudy::default()
        };
        let rows = run_rate_study(&study).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.median_itipup >= 0.0 && r.median_itipup <= 1.0);
        }
        assert!(format_rate_table(&rows).lines().count() == 3);
    }
}
