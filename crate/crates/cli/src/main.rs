use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fattnn::harness::{
    format_rate_table, median, run_rate_study, split, train_len, Dataset, ExperimentConfig,
    ExperimentReport, RateStudy,
};
use fattnn::tensor::{Matrix, TensorSeries};
use fattnn::{generate, run_fattnn, run_raw_tcn_baseline, Error, TcnModel};

#[derive(Parser)]
#[command(
    name = "fattnn",
    version,
    about = "Tensor factor augmented forecasting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Experiment settings shared by most subcommands. Later sources win:
/// defaults, then `--config`, then `--seed`, then each `--set` in order.
#[derive(Args, Clone, Default)]
struct Settings {
    /// Key-value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set epochs=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Settings {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                fattnn::harness::parse_key_values(&text)?
            }
            None => Vec::new(),
        };
        if let Some(seed) = self.seed {
            pairs.push(("seed".into(), seed.to_string()));
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {o:?}: expected KEY=VALUE")))?;
            pairs.push((k.trim().into(), v.trim().into()));
        }
        let cfg = ExperimentConfig::from_pairs(&pairs)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Method {
    Fattnn,
    Raw,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset and write it as a series file.
    Simulate {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Estimate loadings on the training range and write the factor series.
    FitFactors {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, short)]
        data: PathBuf,
        /// Series file of factors (as covariates) and the original responses.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train a network on the training range of a series file.
    Train {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, short)]
        data: PathBuf,
        /// Checkpoint path.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Forecast the test range of a series file with a trained checkpoint.
    Forecast {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, short)]
        data: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment and print its report.
    Evaluate {
        #[command(flatten)]
        settings: Settings,
        /// Series file; simulated from the settings when omitted.
        #[arg(long, short)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-step forecasts as CSV; with `--method both` the method name
        /// is appended to the file stem.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare both methods over several simulated seeds.
    Bench {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Loading-estimation error against sample size and signal scale.
    RateDiag {
        #[arg(long, value_delimiter = ',', default_value = "12,3,12")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,3,4")]
        ranks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,4")]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
}

fn load(path: &Path) -> Result<Dataset, Error> {
    Ok(Dataset::load(path)?)
}

fn simulate(cfg: &ExperimentConfig) -> Result<Dataset, Error> {
    Ok(Dataset::from(&generate(&cfg.sim_config())?))
}

fn print_report(r: &ExperimentReport, dest: Option<&Path>) -> Result<(), Error> {
    let text = r.to_text();
    print!("{text}");
    if let Some(p) = dest {
        fs::write(p, &text).map_err(fattnn::FormatError::from)?;
    }
    Ok(())
}

fn csv_path(base: &Path, method: &str, both: bool) -> PathBuf {
    if !both {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("forecasts");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{method}.{ext}"))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { settings, out } => {
            let cfg = settings.resolve()?;
            let data = simulate(&cfg)?;
            data.save(&out)?;
            println!(
                "wrote {} steps, covariates {:?}, responses {:?} to {}",
                data.len(),
                data.covariates.shape(),
                data.responses.shape(),
                out.display()
            );
        }
        Command::FitFactors {
            settings,
            data,
            out,
        } => {
            let cfg = settings.resolve()?;
            let data = load(&data)?;
            let k = train_len(data.len(), cfg.split_ratio)?;
            let stage = fattnn::harness::fit_factor_stage(&cfg, &data.covariates.slice(0..k))?;
            println!("ranks={}", join(&stage.ranks));
            println!("iterations={}", stage.iterations);
            println!("n_train={k}");
            if let Some(out) = out {
                let rows = stage.factor_rows(&data.covariates)?;
                let factors = TensorSeries::from_matrix(&stage.ranks, &rows)?;
                Dataset::new(factors, data.responses)?.save(&out)?;
                println!("factors={}", out.display());
            }
        }
        Command::Train {
            settings,
            data,
            out,
        } => {
            let cfg = settings.resolve()?;
            let data = load(&data)?;
            let (train, _) = split(&data, cfg.split_ratio)?;
            let x = train.covariates.to_matrix();
            let y = train.responses.to_matrix();
            let mut model = TcnModel::new(cfg.tcn_config(x.cols(), y.cols()))?;
            let report = model.train(&x, &y)?;
            model.save(&out)?;
            println!("initial_loss={:e}", report.initial_loss);
            println!("final_loss={:e}", report.final_loss);
            println!("epochs_run={}", report.train_losses.len());
            println!("best_epoch={}", report.best_epoch);
            println!("checkpoint={}", out.display());
        }
        Command::Forecast {
            settings,
            model,
            data,
            out,
        } => {
            let cfg = settings.resolve()?;
            let model = TcnModel::load(&model)?;
            let data = load(&data)?;
            let k = train_len(data.len(), cfg.split_ratio)?;
            let observed = data.responses.slice(0..k).to_matrix();
            let pred = model.forecast(&data.covariates.to_matrix(), &observed)?;
            let csv = forecast_csv(k, &pred);
            match out {
                Some(p) => fs::write(p, csv).map_err(fattnn::FormatError::from)?,
                None => print!("{csv}"),
            }
        }
        Command::Evaluate {
            settings,
            data,
            method,
            report,
            csv,
        } => {
            let cfg = settings.resolve()?;
            let data = match data {
                Some(p) => load(&p)?,
                None => simulate(&cfg)?,
            };
            let both = method == Method::Both;
            let mut runs = Vec::new();
            if matches!(method, Method::Fattnn | Method::Both) {
                runs.push(run_fattnn(&data, &cfg)?);
            }
            if matches!(method, Method::Raw | Method::Both) {
                runs.push(run_raw_tcn_baseline(&data, &cfg)?);
            }
            let mut text = String::new();
            for (i, r) in runs.iter().enumerate() {
                if i > 0 {
                    println!();
                    text.push('\n');
                }
                print_report(r, None)?;
                text += &r.to_text();
                if let Some(base) = &csv {
                    fs::write(csv_path(base, &r.method, both), r.forecasts_csv())
                        .map_err(fattnn::FormatError::from)?;
                }
            }
            if let Some(p) = report {
                fs::write(p, text).map_err(fattnn::FormatError::from)?;
            }
        }
        Command::Bench { settings, seeds } => {
            let base = settings.resolve()?;
            println!("seed,method,mse,seconds_factorize,seconds_train,seconds_forecast");
            let (mut f, mut r, mut tf, mut tr) = (Vec::new(), Vec::new(), 0.0, 0.0);
            for s in 0..seeds {
                let mut cfg = base.clone();
                cfg.seed = base.seed + s;
                let data = simulate(&cfg)?;
                for rep in [run_fattnn(&data, &cfg)?, run_raw_tcn_baseline(&data, &cfg)?] {
                    let t = rep.timings;
                    println!(
                        "{},{},{:e},{:.3},{:.3},{:.3}",
                        rep.seed, rep.method, rep.mse, t.factorize, t.train, t.forecast
                    );
                    if rep.method == "fattnn" {
                        f.push(rep.mse);
                        tf += t.total();
                    } else {
                        r.push(rep.mse);
                        tr += t.total();
                    }
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            println!("mean_mse_fattnn={:e}", mean(&f));
            println!("mean_mse_raw={:e}", mean(&r));
            println!("median_mse_fattnn={:e}", median(&f));
            println!("median_mse_raw={:e}", median(&r));
            println!("mse_ratio={:.4}", mean(&f) / mean(&r));
            println!("time_ratio={:.4}", tf / tr);
        }
        Command::RateDiag {
            dims,
            ranks,
            ns,
            scales,
            seeds,
            rho,
        } => {
            let study = RateStudy {
                dims,
                ranks,
                sample_sizes: ns,
                lambda_scales: scales,
                seeds: (0..seeds).collect(),
                rho,
                ..RateStudy::default()
            };
            print!("{}", format_rate_table(&run_rate_study(&study)?));
        }
    }
    Ok(())
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn forecast_csv(offset: usize, pred: &Matrix) -> String {
    let mut s = String::from("step,entry,predicted\n");
    for t in 0..pred.rows() {
        for (j, v) in pred.row(t).iter().enumerate() {
            s += &format!("{},{j},{v:e}\n", offset + t);
        }
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
