use rand::Rng as _;

use crate::rng::{stream_rng, streams};
use crate::tensor::TensorSeries;
use crate::Error;

fn check_pair(observed: &TensorSeries, predicted: &TensorSeries) -> Result<(), Error> {
    if observed.shape() != predicted.shape() || observed.len() != predicted.len() {
        return Err(Error::Data(format!(
            "observed {} x {:?} vs predicted {} x {:?}",
            observed.len(),
            observed.shape(),
            predicted.len(),
            predicted.shape()
        )));
    }
    if observed.is_empty() {
        return Err(Error::Data("no test points".into()));
    }
    Ok(())
}

/// Mean squared error of each time step, averaged over its entries.
pub fn per_sample_errors(
    observed: &TensorSeries,
    predicted: &TensorSeries,
) -> Result<Vec<f64>, Error> {
    check_pair(observed, predicted)?;
    let width = observed.slice_len() as f64;
    Ok(observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| {
            o.data()
                .iter()
                .zip(p.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / width
        })
        .collect())
}

/// `(n p_1 ... p_q)^{-1} Σ_i ||Y_i - Ŷ_i||_F^2`.
pub fn mse(observed: &TensorSeries, predicted: &TensorSeries) -> Result<f64, Error> {
    let e = per_sample_errors(observed, predicted)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// Percentile bootstrap interval for the mean of `errors`.
///
/// Draws `reps` resamples of the indices with replacement and reports the
/// `(1 - level) / 2` and `(1 + level) / 2` quantiles (linear interpolation)
/// of the resampled means.
pub fn bootstrap_ci(
    errors: &[f64],
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), Error> {
    if errors.is_empty() {
        return Err(Error::Data("bootstrap needs at least one error".into()));
    }
    if reps == 0 {
        return Err(Error::Config(
            "bootstrap needs at least one replication".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {level} must lie in (0, 1)"
        )));
    }
    let n = errors.len();
    let mut rng = stream_rng(seed, streams::BOOTSTRAP);
    // deviations from a reference keep constant inputs exact
    let reference = errors[0];
    let mut means: Vec<f64> = (0..reps)
        .map(|_| {
            reference
                + (0..n)
                    .map(|_| errors[rng.random_range(0..n)] - reference)
                    .sum::<f64>()
                    / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile(&means, alpha), quantile(&means, 1.0 - alpha)))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}
