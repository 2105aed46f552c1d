use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpfc_bench::{
    emit_report, load_csv, run_benchmark, save_csv, synthetic_dataset, BenchConfig, Error, Format,
    Layout, LoadOptions, Result, SynthConfig,
};
use gpfc_core::{default_priors, Forecaster, Frequency, PriorSpec, SeasonalMode, TrainConfig};

#[derive(Parser)]
#[command(
    name = "gpfc",
    version,
    about = "Automatic Gaussian-process forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forecast one series and write the predictive mean and variance as CSV.
    Forecast {
        /// Input CSV.
        #[arg(long)]
        input: PathBuf,
        /// CSV layout: long or wide.
        #[arg(long, default_value = "wide")]
        layout: Layout,
        /// Series to forecast when the file holds several.
        #[arg(long)]
        series: Option<String>,
        /// monthly, quarterly, six-hourly, or steps per year.
        #[arg(long, default_value = "monthly", value_parser = parse_frequency)]
        freq: Frequency,
        /// Steps ahead; defaults to 18 monthly, 8 quarterly, 42 otherwise.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value = "single", value_parser = parse_mode)]
        mode: SeasonalMode,
        /// Time of the first observation in decimal years, used to label
        /// the output.
        #[arg(long)]
        start: Option<f64>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Training configuration file (key = value lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Prior configuration file, as written by `gpfc priors`.
        #[arg(long)]
        priors: Option<PathBuf>,
    },
    /// Score the forecaster and a seasonal-naive baseline on a dataset.
    Bench {
        /// CSV file or directory of CSV files.
        data: PathBuf,
        #[arg(long, default_value = "long")]
        layout: Layout,
        #[arg(long, default_value = "monthly", value_parser = parse_frequency)]
        freq: Frequency,
        #[arg(long, default_value = "single", value_parser = parse_mode)]
        mode: SeasonalMode,
        /// Held-out steps per series; the frequency default when omitted.
        #[arg(long)]
        test_length: Option<usize>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// table or jsonl.
        #[arg(long, default_value = "table")]
        format: Format,
        /// Seed for perturbed restarts.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        priors: Option<PathBuf>,
        /// Exit with status 0 even when some series fail.
        #[arg(long)]
        allow_failures: bool,
        /// Score in original units instead of standardized units.
        #[arg(long)]
        original_units: bool,
        /// Report file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print or export the active hyperparameter priors.
    Priors {
        /// Prior file to validate and print instead of the defaults.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded synthetic monthly dataset.
    Synth {
        #[arg(long, default_value_t = 40)]
        series: usize,
        #[arg(long, default_value_t = 115)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "long")]
        layout: Layout,
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_frequency(s: &str) -> std::result::Result<Frequency, String> {
    let f = match s {
        "monthly" => Frequency::Monthly,
        "quarterly" => Frequency::Quarterly,
        "six-hourly" => Frequency::SIX_HOURLY,
        other => Frequency::Custom(other.parse().map_err(|_| {
            format!("expected monthly, quarterly, six-hourly or a number, got `{other}`")
        })?),
    };
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

fn parse_mode(s: &str) -> std::result::Result<SeasonalMode, String> {
    match s {
        "single" => Ok(SeasonalMode::Single),
        "double" => Ok(SeasonalMode::Double),
        other => Err(format!("expected single or double, got `{other}`")),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_out(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn train_config(config: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = config {
        cfg = cfg.apply_config_str(&read_text(path)?)?;
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn priors(path: Option<&Path>) -> Result<PriorSpec> {
    match path {
        Some(p) => Ok(PriorSpec::from_config_str(&read_text(p)?)?),
        None => Ok(default_priors()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Forecast {
            input,
            layout,
            series,
            freq,
            horizon,
            mode,
            start,
            output,
            config,
            priors: prior_path,
        } => {
            let opts = LoadOptions {
                layout,
                frequency: freq,
                test_length: Some(1),
            };
            let ds = load_csv(&input, &opts)?;
            let item = match (&series, ds.series()) {
                (Some(name), _) => ds
                    .get(name)
                    .ok_or_else(|| Error::Invalid(format!("no series named `{name}`")))?,
                (None, [only]) => only,
                (None, all) => {
                    return Err(Error::Invalid(format!(
                        "input holds {} series; choose one with --series",
                        all.len()
                    )))
                }
            };
            let mut ts = item.series.clone();
            if let Some(s) = start {
                ts = ts.with_start(s);
            }
            let forecaster = Forecaster::new(mode)
                .with_priors(priors(prior_path.as_deref())?)
                .with_config(train_config(config.as_deref(), None)?);
            let h = horizon.unwrap_or_else(|| freq.default_horizon());
            let (fc, trained) = forecaster.forecast(&ts, h)?;
            if !trained.converged {
                eprintln!(
                    "warning: training hit the iteration limit ({} iterations)",
                    trained.iterations
                );
            }
            let mut text = String::from("step,time,mean,variance,lower95,upper95\n");
            for i in 0..fc.horizon() {
                let sd = fc.variance[i].sqrt();
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fc.steps[i] as i64 + item.first_step,
                    fc.times[i],
                    fc.mean[i],
                    fc.variance[i],
                    fc.mean[i] - 1.959964 * sd,
                    fc.mean[i] + 1.959964 * sd
                ));
            }
            write_out(output.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            data,
            layout,
            freq,
            mode,
            test_length,
            parallel,
            format,
            seed,
            config,
            priors: prior_path,
            allow_failures,
            original_units,
            output,
        } => {
            let opts = LoadOptions {
                layout,
                frequency: freq,
                test_length,
            };
            let ds = load_csv(&data, &opts)?;
            let cfg = BenchConfig {
                mode,
                train: train_config(config.as_deref(), seed)?,
                priors: priors(prior_path.as_deref())?,
                parallelism: parallel,
                original_units,
            };
            let report = run_benchmark(&ds, &cfg)?;
            write_out(output.as_deref(), &emit_report(&report, format))?;
            if report.all_succeeded() || allow_failures {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "{} of {} series failed",
                    report.aggregate.n_failed, report.aggregate.n_series
                );
                Ok(ExitCode::from(2))
            }
        }
        Command::Priors { input, output } => {
            let p = priors(input.as_deref())?;
            write_out(output.as_deref(), &p.to_config_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            series,
            length,
            seed,
            layout,
            output,
        } => {
            let ds = synthetic_dataset(&SynthConfig {
                n_series: series,
                length,
                seed,
                ..SynthConfig::default()
            })?;
            save_csv(&ds, &output, layout)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
