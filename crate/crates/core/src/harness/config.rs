//! Plain-text `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `preset` | reference configuration 1, 2 or 3; applied before other keys | 3 |
//! | `dims`, `ranks`, `response_dims` | simulation shapes | preset |
//! | `n`, `transform`, `sigma_u2`, `cp_rank`, `burn_in`, `rho` | simulation | preset |
//! | `covariate_noise` | add idiosyncratic covariate noise | true |
//! | `lambda` | signal scale, or `default` for `sqrt(prod ranks)` | default |
//! | `lambda_scale` | multiplier on the default signal scale | 1 |
//! | `seed` | drives simulation, network init, dropout and bootstrap | 0 |
//! | `factor_ranks` | list, or `auto` for eigen-ratio selection | simulation ranks |
//! | `r_max` | caps for `auto` | `d_k - 1` |
//! | `split` | training fraction | 0.7 |
//! | `tolerance`, `max_iter` | iterative refinement | 1e-6, 30 |
//! | `center` | subtract the training mean before factor estimation | false |
//! | `channels`, `kernel_size`, `dilations`, `activation`, `dropout` | network | 32,32,32 / 3 / 1,2,4 / relu / 0 |
//! | `learning_rate`, `epochs`, `batch_length`, `validation_fraction`, `patience` | training | 1e-3 / 200 / full / 0.1 / 20 |
//! | `lagged` | feed the previous response to the network | false |
//! | `bootstrap`, `level` | interval replications and coverage | 100, 0.95 |

use std::fmt::Display;
use std::str::FromStr;

use crate::factor::ItipupOptions;
use crate::simgen::{SimConfig, Transform};
use crate::tcn::{Activation, TcnConfig};
use crate::Error;

/// Which factor ranks an experiment uses.
#[derive(Clone, Debug, PartialEq)]
pub enum RankSpec {
    /// Use the simulation ranks.
    Simulation,
    Fixed(Vec<usize>),
    /// Eigen-ratio selection with optional per-mode caps.
    Auto(Option<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: usize,
    pub sim: SimConfig,
    pub lambda_scale: f64,
    pub ranks: RankSpec,
    pub split_ratio: f64,
    pub itipup: ItipupOptions,
    pub center: bool,
    /// Network template; the widths are filled in per method.
    pub tcn: TcnConfig,
    pub bootstrap_reps: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(3)
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, Error> {
    value
        .split(',')
        .map(|v| parse(key, v))
        .collect::<Result<Vec<_>, _>>()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Error> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected a boolean, got {other:?}"
        ))),
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Splits `key = value` lines.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn preset(index: usize) -> Self {
        let sim = SimConfig::preset(index, 0).unwrap_or_else(|| SimConfig::config3(0));
        Self {
            preset: index,
            sim,
            lambda_scale: 1.0,
            ranks: RankSpec::Simulation,
            split_ratio: 0.7,
            itipup: ItipupOptions::default(),
            center: false,
            tcn: TcnConfig::new(1, 1),
            bootstrap_reps: 100,
            ci_level: 0.95,
            seed: 0,
        }
    }

    /// Applies `pairs` in order, except that `preset` is applied first.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, Error> {
        let mut cfg = Self::default();
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "preset") {
            let p: usize = parse("preset", v)?;
            if SimConfig::preset(p, 0).is_none() {
                return Err(Error::Config(format!("unknown preset {p}")));
            }
            cfg = Self::preset(p);
        }
        for (k, v) in pairs {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self, Error> {
        Self::from_pairs(&parse_key_values(text)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let s = &mut self.sim;
        let t = &mut self.tcn;
        match key {
            "preset" => {
                let seed = self.seed;
                *self = Self::from_pairs(&[("preset".into(), value.into())])?;
                self.seed = seed;
            }
            "dims" => s.dims = parse_list(key, value)?,
            "ranks" => s.ranks = parse_list(key, value)?,
            "response_dims" => s.response_dims = parse_list(key, value)?,
            "n" => s.n = parse(key, value)?,
            "transform" => {
                s.transform = Transform::parse(value.trim())
                    .ok_or_else(|| Error::Config(format!("unknown transform {value:?}")))?
            }
            "sigma_u2" => s.sigma_u2 = parse(key, value)?,
            "cp_rank" => s.cp_rank = parse(key, value)?,
            "burn_in" => s.burn_in = parse(key, value)?,
            "rho" => s.rho = parse(key, value)?,
            "covariate_noise" => s.covariate_noise = parse_bool(key, value)?,
            "lambda" => {
                s.lambda = match value.trim() {
                    "default" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "lambda_scale" => self.lambda_scale = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "factor_ranks" => {
                self.ranks = match value.trim() {
                    "auto" => RankSpec::Auto(match &self.ranks {
                        RankSpec::Auto(caps) => caps.clone(),
                        _ => None,
                    }),
                    "simulation" => RankSpec::Simulation,
                    v => RankSpec::Fixed(parse_list(key, v)?),
                }
            }
            "r_max" => self.ranks = RankSpec::Auto(Some(parse_list(key, value)?)),
            "split" => self.split_ratio = parse(key, value)?,
            "tolerance" => self.itipup.tolerance = parse(key, value)?,
            "max_iter" => self.itipup.max_iter = parse(key, value)?,
            "center" => self.center = parse_bool(key, value)?,
            "channels" => t.channels = parse_list(key, value)?,
            "kernel_size" => t.kernel_size = parse(key, value)?,
            "dilations" => t.dilations = parse_list(key, value)?,
            "activation" => {
                t.activation = Activation::parse(value.trim())
                    .ok_or_else(|| Error::Config(format!("unknown activation {value:?}")))?
            }
            "dropout" => t.dropout_rate = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "batch_length" => {
                t.batch_length = match value.trim() {
                    "full" | "0" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "validation_fraction" => t.validation_fraction = parse(key, value)?,
            "patience" => t.patience = parse(key, value)?,
            "lagged" => t.use_lagged_response = parse_bool(key, value)?,
            "bootstrap" => self.bootstrap_reps = parse(key, value)?,
            "level" => self.ci_level = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Simulation config with the experiment seed and signal scale applied.
    pub fn sim_config(&self) -> SimConfig {
        let mut s = self.sim.clone();
        s.seed = self.seed;
        if self.lambda_scale != 1.0 {
            s.lambda = Some(s.lambda() * self.lambda_scale);
        }
        s
    }

    /// Network config for the given widths, seeded from the experiment.
    pub fn tcn_config(&self, input_width: usize, output_width: usize) -> TcnConfig {
        let mut t = self.tcn.clone();
        t.input_width = input_width;
        t.output_width = output_width;
        t.seed = self.seed;
        t
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.sim_config().validate()?;
        let mut probe = self.tcn_config(1, 1);
        probe.use_lagged_response = false;
        probe.validate()?;
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio {} must lie in (0, 1)",
                self.split_ratio
            )));
        }
        if !(self.lambda_scale >= 0.0) || !self.lambda_scale.is_finite() {
            return Err(Error::Config(format!(
                "lambda_scale {} must be finite and nonnegative",
                self.lambda_scale
            )));
        }
        if self.bootstrap_reps == 0 || !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(
                "bootstrap needs B >= 1 and a level in (0, 1)".into(),
            ));
        }
        if !(self.itipup.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Every resolved setting, in the key-value vocabulary above.
    pub fn echo(&self) -> Vec<(String, String)> {
        let s = &self.sim;
        let t = &self.tcn;
        let mut out: Vec<(&str, String)> = vec![
            ("preset", self.preset.to_string()),
            ("dims", join(&s.dims)),
            ("ranks", join(&s.ranks)),
            ("response_dims", join(&s.response_dims)),
            ("n", s.n.to_string()),
            ("transform", s.transform.name().into()),
            ("sigma_u2", s.sigma_u2.to_string()),
            ("cp_rank", s.cp_rank.to_string()),
            ("burn_in", s.burn_in.to_string()),
            ("rho", s.rho.to_string()),
            ("covariate_noise", s.covariate_noise.to_string()),
            (
                "lambda",
                s.lambda.map_or_else(|| "default".into(), |l| l.to_string()),
            ),
            ("lambda_scale", self.lambda_scale.to_string()),
            ("seed", self.seed.to_string()),
        ];
        match &self.ranks {
            RankSpec::Simulation => out.push(("factor_ranks", "simulation".into())),
            RankSpec::Fixed(r) => out.push(("factor_ranks", join(r))),
            RankSpec::Auto(caps) => {
                out.push(("factor_ranks", "auto".into()));
                if let Some(c) = caps {
                    out.push(("r_max", join(c)));
                }
            }
        }
        out.extend([
            ("split", self.split_ratio.to_string()),
            ("tolerance", self.itipup.tolerance.to_string()),
            ("max_iter", self.itipup.max_iter.to_string()),
            ("center", self.center.to_string()),
            ("channels", join(&t.channels)),
            ("kernel_size", t.kernel_size.to_string()),
            ("dilations", join(&t.dilations)),
            ("activation", t.activation.name().into()),
            ("dropout", t.dropout_rate.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("epochs", t.epochs.to_string()),
            (
                "batch_length",
                t.batch_length
                    .map_or_else(|| "full".into(), |b| b.to_string()),
            ),
            ("validation_fraction", t.validation_fraction.to_string()),
            ("patience", t.patience.to_string()),
            ("lagged", t.use_lagged_response.to_string()),
            ("bootstrap", self.bootstrap_reps.to_string()),
            ("level", self.ci_level.to_string()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The echo rendered as a config file that parses back to `self`.
    pub fn to_text(&self) -> String {
        self.echo()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_config() {
        let c = ExperimentConfig::default();
        assert_eq!(c.sim.dims, vec![12, 3, 12]);
        assert_eq!(c.split_ratio, 0.7);
        assert_eq!(c.bootstrap_reps, 100);
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let text = "# comment\npreset = 2\nseed = 9\nfactor_ranks = auto\nr_max = 5,2,4\n\
                    epochs = 12\nbatch_length = 16\nlagged = on\nlambda = 3.5\n";
        let c = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(c.sim.dims, vec![30, 6, 12]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.ranks, RankSpec::Auto(Some(vec![5, 2, 4])));
        assert_eq!(c.tcn.batch_length, Some(16));
        assert!(c.tcn.use_lagged_response);
        assert_eq!(ExperimentConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn preset_applies_first() {
        let c = ExperimentConfig::from_text("n = 50\npreset = 1\n").unwrap();
        assert_eq!(c.sim.n, 50);
        assert_eq!(c.sim.dims, vec![25, 25, 12]);
    }

    #[test]
    fn bad_input() {
        for text in [
            "nonsense",
            "what = 1",
            "n = x",
            "preset = 7",
            "center = maybe",
        ] {
            let e = ExperimentConfig::from_text(text).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{text}");
        }
        let c = ExperimentConfig::from_text("split = 1.5").unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn lambda_scale_multiplies_default() {
        let c = ExperimentConfig::from_text("lambda_scale = 4").unwrap();
        assert!((c.sim_config().lambda() - 4.0 * 48f64.sqrt()).abs() < 1e-12);
    }
}
