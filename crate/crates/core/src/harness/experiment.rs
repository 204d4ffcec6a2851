//! The factor-augmented pipeline, the raw-covariate baseline and their
//! reports.

use std::fmt::Write as _;
use std::time::Instant;

use super::config::{ExperimentConfig, RankSpec};
use super::data::{train_len, Dataset};
use super::metrics::{bootstrap_ci, per_sample_errors};
use crate::factor::{extract_factors, itipup_fit, select_ranks, LoadingSet};
use crate::tcn::TcnModel;
use crate::tensor::{DenseTensor, Matrix, TensorSeries};
use crate::Error;

/// Wall-clock seconds per phase, from a monotonic clock.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub factorize: f64,
    pub train: f64,
    pub forecast: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.factorize + self.train + self.forecast
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub method: String,
    pub mse: f64,
    pub ci: (f64, f64),
    pub bootstrap_reps: usize,
    pub timings: PhaseTimings,
    pub seed: u64,
    /// Per-step network input width.
    pub input_width: usize,
    /// Factor ranks used, if any.
    pub ranks: Option<Vec<usize>>,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs_run: usize,
    pub config: Vec<(String, String)>,
    /// Test-range observations and forecasts, one row per step.
    pub observed: Matrix,
    pub predicted: Matrix,
}

fn millis(secs: f64) -> String {
    format!("{:.3}", secs)
}

impl ExperimentReport {
    /// Machine-readable `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("method", self.method.clone());
        kv("mse", format!("{:e}", self.mse));
        kv("ci_lo", format!("{:e}", self.ci.0));
        kv("ci_hi", format!("{:e}", self.ci.1));
        kv("bootstrap_reps", self.bootstrap_reps.to_string());
        kv("seconds_factorize", millis(self.timings.factorize));
        kv("seconds_train", millis(self.timings.train));
        kv("seconds_forecast", millis(self.timings.forecast));
        kv("seconds_total", millis(self.timings.total()));
        kv("seed", self.seed.to_string());
        kv("input_width", self.input_width.to_string());
        if let Some(r) = &self.ranks {
            kv(
                "factor_ranks_used",
                r.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
        }
        kv("n_train", self.n_train.to_string());
        kv("n_test", self.n_test.to_string());
        kv("epochs_run", self.epochs_run.to_string());
        for (k, v) in &self.config {
            kv(&format!("config.{k}"), v.clone());
        }
        s
    }

    /// Long-format CSV of the test range: `step,entry,observed,predicted`.
    pub fn forecasts_csv(&self) -> String {
        let mut s = String::from("step,entry,observed,predicted\n");
        for t in 0..self.observed.rows() {
            for (j, (o, p)) in self
                .observed
                .row(t)
                .iter()
                .zip(self.predicted.row(t))
                .enumerate()
            {
                let _ = writeln!(s, "{},{j},{o:e},{p:e}", self.n_train + t);
            }
        }
        s
    }
}

/// Loadings estimated on a training range and the settings used.
#[derive(Clone, Debug)]
pub struct FactorStage {
    pub loadings: LoadingSet,
    pub ranks: Vec<usize>,
    /// Training-range mean subtracted before projection, when centering.
    pub center: Option<DenseTensor>,
    pub iterations: usize,
}

fn resolve_ranks(cfg: &ExperimentConfig, train: &TensorSeries) -> Result<Vec<usize>, Error> {
    Ok(match &cfg.ranks {
        RankSpec::Simulation => cfg.sim.ranks.clone(),
        RankSpec::Fixed(r) => r.clone(),
        RankSpec::Auto(caps) => {
            let caps = caps.clone().unwrap_or_else(|| {
                train
                    .shape()
                    .iter()
                    .map(|d| d.saturating_sub(1).max(1))
                    .collect()
            });
            select_ranks(train, &caps)?
        }
    })
}

fn series_mean(series: &TensorSeries) -> DenseTensor {
    let mut acc = DenseTensor::zeros(series.shape());
    for x in series {
        acc = acc.add(x).expect("series shapes agree");
    }
    acc.scale(1.0 / series.len() as f64)
}

fn subtract(series: &TensorSeries, mean: &DenseTensor) -> Result<TensorSeries, Error> {
    Ok(series.map(series.shape().to_vec(), |x| x.sub(mean))?)
}

/// Estimates loadings from the training covariates only.
pub fn fit_factor_stage(
    cfg: &ExperimentConfig,
    train: &TensorSeries,
) -> Result<FactorStage, Error> {
    let center = cfg.center.then(|| series_mean(train));
    let centered;
    let series = match &center {
        Some(m) => {
            centered = subtract(train, m)?;
            &centered
        }
        None => train,
    };
    let ranks = resolve_ranks(cfg, series)?;
    let fit = itipup_fit(series, &ranks, cfg.itipup)?;
    Ok(FactorStage {
        loadings: fit.loadings,
        ranks,
        center,
        iterations: fit.iterations_used,
    })
}

impl FactorStage {
    /// Factor rows for every step of `series` with the frozen loadings.
    pub fn factor_rows(&self, series: &TensorSeries) -> Result<Matrix, Error> {
        let factors = match &self.center {
            Some(m) => extract_factors(&subtract(series, m)?, &self.loadings)?,
            None => extract_factors(series, &self.loadings)?,
        };
        Ok(factors.to_matrix())
    }
}

fn check(data: &Dataset, cfg: &ExperimentConfig) -> Result<usize, Error> {
    cfg.validate()?;
    let k = train_len(data.len(), cfg.split_ratio)?;
    let train = data.slice(0..k);
    if !train.covariates.is_finite() || !train.responses.is_finite() {
        return Err(Error::Data(
            "non-finite values in the training range".into(),
        ));
    }
    Ok(k)
}

struct Fitted {
    report_input_width: usize,
    epochs_run: usize,
    predicted: Matrix,
    train_seconds: f64,
    forecast_seconds: f64,
}

/// Trains a network on `features[..k]` and forecasts the remaining rows.
/// `features_for_forecast` is called after training so that its cost is
/// charged to the forecast phase.
fn train_and_forecast(
    cfg: &ExperimentConfig,
    data: &Dataset,
    k: usize,
    train_features: Matrix,
    features_for_forecast: impl FnOnce() -> Result<Matrix, Error>,
) -> Result<Fitted, Error> {
    let responses = data.responses.to_matrix();
    let train_y = Matrix::from_fn(k, responses.cols(), |i, j| responses.get(i, j));
    let tcn_cfg = cfg.tcn_config(train_features.cols(), responses.cols());

    let clock = Instant::now();
    let mut model = TcnModel::new(tcn_cfg)?;
    let trained = model.train(&train_features, &train_y)?;
    let train_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let all = features_for_forecast()?;
    let predicted = model.forecast(&all, &train_y)?;
    let forecast_seconds = clock.elapsed().as_secs_f64();
    if !predicted.is_finite() {
        return Err(Error::Numerical(
            "forecast produced non-finite values".into(),
        ));
    }
    Ok(Fitted {
        report_input_width: train_features.cols(),
        epochs_run: trained.train_losses.len(),
        predicted,
        train_seconds,
        forecast_seconds,
    })
}

fn finish(
    method: &str,
    cfg: &ExperimentConfig,
    data: &Dataset,
    k: usize,
    fitted: Fitted,
    factorize_seconds: f64,
    ranks: Option<Vec<usize>>,
) -> Result<ExperimentReport, Error> {
    let test = data.responses.slice(k..data.len());
    let predicted = TensorSeries::from_matrix(test.shape(), &fitted.predicted)?;
    let errors = per_sample_errors(&test, &predicted)?;
    let mse = errors.iter().sum::<f64>() / errors.len() as f64;
    let ci = bootstrap_ci(&errors, cfg.bootstrap_reps, cfg.ci_level, cfg.seed)?;
    Ok(ExperimentReport {
        method: method.into(),
        mse,
        ci,
        bootstrap_reps: cfg.bootstrap_reps,
        timings: PhaseTimings {
            factorize: factorize_seconds,
            train: fitted.train_seconds,
            forecast: fitted.forecast_seconds,
        },
        seed: cfg.seed,
        input_width: fitted.report_input_width,
        ranks,
        n_train: k,
        n_test: data.len() - k,
        epochs_run: fitted.epochs_run,
        config: cfg.echo(),
        observed: test.to_matrix(),
        predicted: fitted.predicted,
    })
}

/// Factor-augmented forecasting: loadings from the training covariates,
/// factors for every step with those loadings frozen, a network from
/// factors to responses, and a multi-step forecast of the test range.
pub fn run_fattnn(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport, Error> {
    let k = check(data, cfg)?;
    let clock = Instant::now();
    let train_x = data.covariates.slice(0..k);
    let stage = fit_factor_stage(cfg, &train_x)?;
    let train_features = stage.factor_rows(&train_x)?;
    let factorize_seconds = clock.elapsed().as_secs_f64();
    let fitted = train_and_forecast(cfg, data, k, train_features, || {
        stage.factor_rows(&data.covariates)
    })?;
    finish(
        "fattnn",
        cfg,
        data,
        k,
        fitted,
        factorize_seconds,
        Some(stage.ranks),
    )
}

/// The same network and budget on the flattened raw covariates.
pub fn run_raw_tcn_baseline(
    data: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, Error> {
    let k = check(data, cfg)?;
    let clock = Instant::now();
    let train_features = data.covariates.slice(0..k).to_matrix();
    let factorize_seconds = clock.elapsed().as_secs_f64();
    let fitted = train_and_forecast(cfg, data, k, train_features, || {
        Ok(data.covariates.to_matrix())
    })?;
    finish("raw_tcn", cfg, data, k, fitted, factorize_seconds, None)
}

/// Predicts the last observed training response for every test step.
pub fn last_value_mse(data: &Dataset, ratio: f64) -> Result<f64, Error> {
    let k = train_len(data.len(), ratio)?;
    let last = data.responses.get(k - 1);
    let test = data.responses.slice(k..data.len());
    let pred = TensorSeries::new(test.shape().to_vec(), vec![last.clone(); test.len()])?;
    super::metrics::mse(&test, &pred)
}
