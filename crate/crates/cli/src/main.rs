use clap::{Parser, Subcommand};
use pumpstation_cli::config::RunConfig;
use pumpstation_cli::error::AppError;
use pumpstation_cli::lock::RunLock;
use pumpstation_cli::pipeline;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "pumpstation",
    version,
    about = "Synthetic wastewater pumping station workbench: data synthesis, intake forecasting, plant emulation and predictive pump control"
)]
struct Args {
    /// TOML run configuration; defaults are the desk-scale setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory for artifacts.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,

    /// Worker threads for independent fits (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Training iterations override.
    #[arg(long, global = true)]
    iterations: Option<usize>,

    /// Force the documented desk-scale defaults (30 days, 2000 iterations).
    #[arg(long, global = true, default_value_t = false)]
    desk_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic plant history (uniform + irregular CSVs).
    Synth {
        /// Days of history.
        #[arg(long)]
        days: Option<u32>,
    },
    /// Fit the four forecast families on the chronological training split.
    FitForecast,
    /// Score the fitted families and run the feature ablation.
    EvalForecast,
    /// Fit the outflow and level emulation models.
    FitEmulator,
    /// Train the with- and without-forecast control agents.
    Train,
    /// Compare the four scenarios on held-out episodes.
    Evaluate,
    /// Train and compare the two reward-weighting scenarios.
    Tradeoff,
    /// Smoke run against the ground-truth plant dynamics.
    Calibrate {
        /// Iterations of the calibration continuation.
        #[arg(long, default_value_t = 100)]
        iterations: usize,
    },
}

fn load_config(args: &Args) -> Result<RunConfig, AppError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_toml_file(path).map_err(AppError::validation)?,
        None => RunConfig::desk_scale(),
    };
    if args.desk_scale {
        cfg.ppo.iterations = 2000;
        cfg.harness.synth_days = 30;
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(iterations) = args.iterations {
        cfg.ppo.iterations = iterations;
    }
    if let Some(workers) = args.workers {
        cfg.harness.workers = workers;
    }
    cfg.apply_seed();
    cfg.validate().map_err(AppError::validation)?;
    Ok(cfg)
}

fn run(args: Args) -> Result<(), AppError> {
    let cfg = load_config(&args)?;
    let _lock = RunLock::acquire(&args.out)?;
    match args.command {
        Command::Synth { days } => {
            let days = days.unwrap_or(cfg.harness.synth_days);
            let manifest = pipeline::run_synth(&cfg, &args.out, days)?;
            println!(
                "synth: {} days, seed {}, config {}",
                days,
                manifest.seed,
                &manifest.config_sha256[..12]
            );
        }
        Command::FitForecast => {
            pipeline::run_fit_forecast(&cfg, &args.out)?;
            println!("fit-forecast: four families written");
        }
        Command::EvalForecast => {
            let artifacts = pipeline::run_eval_forecast(&cfg, &args.out)?;
            for eval in &artifacts.evaluations {
                let crps = eval
                    .mean_crps()
                    .map(|c| format!("{c:.1}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "eval-forecast: {:<12} MAE {:.1} m3/h, CRPS {} m3/h",
                    eval.family.as_str(),
                    eval.mean_mae(),
                    crps
                );
            }
        }
        Command::FitEmulator => {
            let artifacts = pipeline::run_fit_emulator(&cfg, &args.out)?;
            println!(
                "fit-emulator: outflow NMAE {:.3}%, level MAE {:.2} cm, violations {}",
                artifacts.outflow_report.nmae * 100.0,
                artifacts.level_report.mae_m * 100.0,
                artifacts.outflow_report.monotonicity_violations
            );
        }
        Command::Train => {
            let artifacts = pipeline::run_train(&cfg, &args.out)?;
            let last = artifacts.with_forecast.log.last().expect("nonempty log");
            println!(
                "train: {} iterations; with-forecast final mean reward {:.5}",
                cfg.ppo.iterations, last.mean_reward
            );
        }
        Command::Evaluate => {
            let reports = pipeline::run_evaluate(&cfg, &args.out, None)?;
            for r in &reports {
                println!(
                    "evaluate: {:<22} energy {:>8.3} MWh, crossings {:>3}, above-alarm steps {:>4}, level {:.2}+/-{:.2} m",
                    r.scenario.as_str(),
                    r.energy_mwh,
                    r.alarm_crossings,
                    r.alarm_step_occurrences,
                    r.level_mean_m,
                    r.level_std_m
                );
            }
        }
        Command::Tradeoff => {
            let entries = pipeline::run_tradeoff(&cfg, &args.out)?;
            for e in &entries {
                println!(
                    "tradeoff: c1={} c2={} -> energy {:.3} MWh, crossings {}",
                    e.pair.c1, e.pair.c2, e.report.energy_mwh, e.report.alarm_crossings
                );
            }
        }
        Command::Calibrate { iterations } => {
            let report = pipeline::run_calibrate(&cfg, &args.out, iterations)?;
            println!(
                "calibrate: {} iterations on ground-truth dynamics, final mean reward {:.5}",
                report.iterations, report.final_mean_reward
            );
        }
    }
    Ok(())
}

fn main() {
    env_logger::init();
    let args = Args::parse();
    if let Err(e) = run(args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
