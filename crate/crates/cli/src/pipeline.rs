//! The run pipeline behind every CLI command. Each stage reads the
//! artifacts of earlier stages from the run directory and writes its own,
//! so stages can be rerun independently and reproducibly.

use crate::config::RunConfig;
use crate::error::AppError;
use pumpstation::agent::Checkpoint;
use pumpstation::emulator::{
    clean_training_records, fit_level, fit_outflow, LevelFitReport, LevelModel, OutflowFitReport,
    OutflowModel,
};
use pumpstation::features::{build_matrix, resample_uniform, UniformSeries};
use pumpstation::forecast::{
    ablation_study, evaluate_model_set, fit_model_set, FamilyEvaluation, ForecastModelSet,
    GbtParams,
};
use pumpstation::harness::{
    make_episodes, scenario_summary_csv, tradeoff_scan, train, EmuEnv, EpisodeSets, ForecastMode,
    ScenarioReport, TradeoffEntry, TrainOutput, WeightPair,
};
use pumpstation::io::{load_versioned, save_versioned, sha256_hex};
use pumpstation::plant::{
    generate_intake, irregularize, read_csv, simulate_plant, write_csv, BaselineController,
    IntakeSeries, RawRecord,
};
use pumpstation::{forecast, harness};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST_SCHEMA: &str = "pumpstation/manifest/v1";
pub const FORECAST_MODEL_SCHEMA: &str = "pumpstation/forecast-model/v1";
pub const EMULATOR_SCHEMA: &str = "pumpstation/emulator/v1";
pub const REPORT_SCHEMA: &str = "pumpstation/reports/v1";

pub const UNIFORM_CSV: &str = "plant_uniform.csv";
pub const IRREGULAR_CSV: &str = "scada_history.csv";

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::runtime(format!("{}: {e}", path.display())))
}

/// Emulator fidelity targets enforced by `fit-emulator`.
pub const OUTFLOW_NMAE_TARGET: f64 = 0.05;
pub const LEVEL_MAE_TARGET_M: f64 = 0.05;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_sha256: String,
    pub files: Vec<(String, String)>,
}

/// Stage 1: synthesize the plant history (uniform and irregular CSVs plus
/// a manifest binding them to the seed and config hash).
pub fn run_synth(cfg: &RunConfig, out: &Path, days: u32) -> Result<Manifest, AppError> {
    if days == 0 {
        return Err(AppError::validation("days must be at least 1"));
    }
    fs::create_dir_all(out).map_err(|e| AppError::runtime(format!("{}: {e}", out.display())))?;
    let intake = generate_intake(&cfg.plant, days).map_err(AppError::from_plant)?;
    let mut controller = BaselineController::new(cfg.plant.clone());
    let sim = simulate_plant(&intake, &mut controller, &cfg.plant).map_err(AppError::from_plant)?;
    let uniform_path = out.join(UNIFORM_CSV);
    write_csv(&sim.records, &uniform_path).map_err(AppError::from_plant)?;
    let irregular = irregularize(&sim.records, &cfg.plant);
    let irregular_path = out.join(IRREGULAR_CSV);
    write_csv(&irregular, &irregular_path).map_err(AppError::from_plant)?;

    let mut files = Vec::new();
    for path in [&uniform_path, &irregular_path] {
        let bytes =
            fs::read(path).map_err(|e| AppError::runtime(format!("{}: {e}", path.display())))?;
        files.push((
            path.file_name().unwrap().to_string_lossy().to_string(),
            sha256_hex(&bytes),
        ));
    }
    let manifest = Manifest {
        seed: cfg.master_seed(),
        config_sha256: cfg.config_hash(),
        files,
    };
    save_versioned(&out.join("manifest.json"), MANIFEST_SCHEMA, &manifest)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    Ok(manifest)
}

/// Loads the irregular history written by `synth`.
pub fn load_history(out: &Path) -> Result<Vec<RawRecord>, AppError> {
    let path = out.join(IRREGULAR_CSV);
    read_csv(&path).map_err(AppError::from_plant)
}

/// Uniform 2-minute series reconstructed from the history.
pub fn uniform_series(cfg: &RunConfig, records: &[RawRecord]) -> Result<UniformSeries, AppError> {
    let series = IntakeSeries::from_records(records).map_err(AppError::from_plant)?;
    let (uniform, _gaps) =
        resample_uniform(&series, cfg.plant.step_minutes).map_err(|e| AppError::runtime(e.to_string()))?;
    Ok(uniform)
}

fn train_end_index(cfg: &RunConfig, series: &UniformSeries) -> usize {
    (series.len() as f64 * cfg.forecast.train_fraction) as usize
}

fn model_path(out: &Path, family: forecast::Family) -> PathBuf {
    out.join(format!("forecast_{}.json", family.as_str()))
}

/// Stage 2a: fit all four forecast families on the chronological head of
/// the series and persist them.
pub fn run_fit_forecast(cfg: &RunConfig, out: &Path) -> Result<(), AppError> {
    let records = load_history(out)?;
    let series = uniform_series(cfg, &records)?;
    let train_end = train_end_index(cfg, &series);
    let seed = cfg.master_seed();

    let gbt_params = if cfg.forecast.grid_search {
        pick_grid_params(cfg, &series, train_end)?
    } else {
        cfg.forecast.gbt
    };

    for family in [
        forecast::Family::Gbt,
        forecast::Family::Lqr,
        forecast::Family::Persistence,
        forecast::Family::CondByHour,
    ] {
        let set = fit_model_set(family, &series, train_end, &gbt_params, seed)
            .map_err(|e| AppError::runtime(e.to_string()))?;
        save_versioned(&model_path(out, family), FORECAST_MODEL_SCHEMA, &set)
            .map_err(|e| AppError::runtime(e.to_string()))?;
    }
    Ok(())
}

/// Median-pinball grid selection on the first horizon, used only when the
/// configuration enables the documented grid.
fn pick_grid_params(
    cfg: &RunConfig,
    series: &UniformSeries,
    train_end: usize,
) -> Result<GbtParams, AppError> {
    let tables = build_matrix(series, 1).map_err(|e| AppError::runtime(e.to_string()))?;
    let table = &tables[0];
    let upto = table
        .launch_indices
        .iter()
        .position(|t| *t >= train_end)
        .unwrap_or(table.len());
    let (_, params) = forecast::fit_gbt_grid(&table.rows[..upto], &table.targets[..upto], 0.5)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    let _ = cfg;
    Ok(params)
}

pub fn load_forecast_model(
    out: &Path,
    family: forecast::Family,
) -> Result<ForecastModelSet, AppError> {
    let set: ForecastModelSet = load_versioned(&model_path(out, family), FORECAST_MODEL_SCHEMA)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    set.validate().map_err(|e| AppError::runtime(e.to_string()))?;
    Ok(set)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForecastEvalArtifacts {
    pub evaluations: Vec<FamilyEvaluation>,
    pub ablation: Vec<forecast::AblationRow>,
}

/// Stage 2b: score every family on the held-out tail and run the
/// feature-combination ablation; write the metric tables.
pub fn run_eval_forecast(cfg: &RunConfig, out: &Path) -> Result<ForecastEvalArtifacts, AppError> {
    let records = load_history(out)?;
    let series = uniform_series(cfg, &records)?;
    let train_end = train_end_index(cfg, &series);
    let launches: Vec<usize> = (train_end..series.len()).collect();

    let mut evaluations = Vec::new();
    for family in [
        forecast::Family::Gbt,
        forecast::Family::Lqr,
        forecast::Family::Persistence,
        forecast::Family::CondByHour,
    ] {
        let set = load_forecast_model(out, family)?;
        let eval = evaluate_model_set(&set, &series, &launches)
            .map_err(|e| AppError::runtime(e.to_string()))?;
        evaluations.push(eval);
    }

    // horizon metrics table
    let mut horizon_csv = String::from("family,horizon,mae_m3h,crps_m3h\n");
    for eval in &evaluations {
        for h in &eval.per_horizon {
            let crps = h
                .crps
                .map(|c| format!("{c:.6}"))
                .unwrap_or_default();
            horizon_csv.push_str(&format!(
                "{},{},{:.6},{}\n",
                eval.family.as_str(),
                h.horizon,
                h.mae,
                crps
            ));
        }
    }
    write_text(&out.join("forecast_metrics_horizon.csv"), &horizon_csv)?;

    // quantile metrics table (calibration per level, sharpness per pair)
    let mut quantile_csv =
        String::from("family,kind,alpha_low,alpha_high,empirical,deviation,mean_width_m3h\n");
    for eval in &evaluations {
        for c in &eval.calibration {
            quantile_csv.push_str(&format!(
                "{},calibration,{:.2},,{:.6},{:.6},\n",
                eval.family.as_str(),
                c.alpha,
                c.empirical,
                c.deviation
            ));
        }
        for s in &eval.sharpness {
            quantile_csv.push_str(&format!(
                "{},sharpness,{:.2},{:.2},,,{:.6}\n",
                eval.family.as_str(),
                s.alpha_low,
                s.alpha_high,
                s.mean_width
            ));
        }
    }
    write_text(&out.join("forecast_metrics_quantile.csv"), &quantile_csv)?;

    // ablation on the first lead time
    let tables = build_matrix(&series, 1).map_err(|e| AppError::runtime(e.to_string()))?;
    let ablation = ablation_study(&tables[0], cfg.forecast.train_fraction)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    let mut ablation_csv = String::from("model,mae_m3h,crps_m3h\n");
    for row in &ablation {
        ablation_csv.push_str(&format!("{},{:.6},{:.6}\n", row.id, row.mae, row.crps));
    }
    write_text(&out.join("ablation.csv"), &ablation_csv)?;

    let artifacts = ForecastEvalArtifacts {
        evaluations,
        ablation,
    };
    save_versioned(&out.join("forecast_eval.json"), REPORT_SCHEMA, &artifacts)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    Ok(artifacts)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmulatorArtifacts {
    pub outflow: OutflowModel,
    pub level: LevelModel,
    pub outflow_report: OutflowFitReport,
    pub level_report: LevelFitReport,
}

/// Stage 3: clean the history and fit the two emulator models; nonzero
/// exit when the fidelity targets are missed.
pub fn run_fit_emulator(cfg: &RunConfig, out: &Path) -> Result<EmulatorArtifacts, AppError> {
    let records = load_history(out)?;
    let cleaned = clean_training_records(&records, &cfg.plant);
    let (outflow, outflow_report) = fit_outflow(&cleaned, &cfg.forecast.gbt, &cfg.plant)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    let (level, level_report) =
        fit_level(&cleaned, pumpstation::emulator::CLEAN_WINDOW_MINUTES)
            .map_err(|e| AppError::runtime(e.to_string()))?;

    let artifacts = EmulatorArtifacts {
        outflow,
        level,
        outflow_report: outflow_report.clone(),
        level_report: level_report.clone(),
    };
    save_versioned(&out.join("emulator.json"), EMULATOR_SCHEMA, &artifacts)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    let fit_report = serde_json::json!({
        "outflow": outflow_report,
        "level": level_report,
        "targets": {
            "outflow_nmae": OUTFLOW_NMAE_TARGET,
            "level_mae_m": LEVEL_MAE_TARGET_M,
        },
    });
    write_text(
        &out.join("emulator_fit_report.json"),
        &serde_json::to_string_pretty(&fit_report).expect("report serializes"),
    )?;

    if outflow_report.nmae > OUTFLOW_NMAE_TARGET
        || level_report.mae_m > LEVEL_MAE_TARGET_M
        || outflow_report.monotonicity_violations > 0
    {
        return Err(AppError::target_miss(format!(
            "emulator fidelity targets missed: NMAE {:.4} (target {OUTFLOW_NMAE_TARGET}), level MAE {:.4} m (target {LEVEL_MAE_TARGET_M}), violations {}",
            outflow_report.nmae, level_report.mae_m, outflow_report.monotonicity_violations
        )));
    }
    Ok(artifacts)
}

pub fn load_emulator(out: &Path) -> Result<EmulatorArtifacts, AppError> {
    load_versioned(&out.join("emulator.json"), EMULATOR_SCHEMA)
        .map_err(|e| AppError::runtime(e.to_string()))
}

/// Builds the episode sets used by training and evaluation.
pub fn build_episodes(cfg: &RunConfig, out: &Path) -> Result<EpisodeSets, AppError> {
    let records = load_history(out)?;
    let series = uniform_series(cfg, &records)?;
    let gbt = load_forecast_model(out, forecast::Family::Gbt)?;
    make_episodes(&series, &records, &gbt, cfg.harness.min_episode_len)
        .map_err(|e| AppError::runtime(e.to_string()))
}

pub struct TrainArtifacts {
    pub with_forecast: TrainOutput,
    pub without_forecast: TrainOutput,
}

/// Stage 4: train the with-forecast and without-forecast agents.
pub fn run_train(cfg: &RunConfig, out: &Path) -> Result<TrainArtifacts, AppError> {
    let emulator = load_emulator(out)?;
    let episodes = build_episodes(cfg, out)?;
    let env = EmuEnv {
        outflow: &emulator.outflow,
        level: &emulator.level,
        plant: &cfg.plant,
        reward: cfg.ppo.reward,
    };
    let seed = cfg.master_seed();

    let with_forecast = train(
        &env,
        &episodes.train,
        &episodes.test,
        ForecastMode::Probabilistic,
        &cfg.ppo,
        &cfg.harness,
        seed,
        "agent/with-forecast",
    )
    .map_err(|e| AppError::runtime(e.to_string()))?;
    persist_training(out, "with_forecast", &with_forecast, cfg)?;

    let without_forecast = train(
        &env,
        &episodes.train,
        &episodes.test,
        ForecastMode::Zeroed,
        &cfg.ppo,
        &cfg.harness,
        seed,
        "agent/without-forecast",
    )
    .map_err(|e| AppError::runtime(e.to_string()))?;
    persist_training(out, "without_forecast", &without_forecast, cfg)?;

    Ok(TrainArtifacts {
        with_forecast,
        without_forecast,
    })
}

fn persist_training(
    out: &Path,
    tag: &str,
    output: &TrainOutput,
    cfg: &RunConfig,
) -> Result<(), AppError> {
    let dir = out.join("checkpoints");
    fs::create_dir_all(&dir).map_err(|e| AppError::runtime(e.to_string()))?;
    for ck in &output.checkpoints {
        ck.save(&dir.join(format!("{tag}_{:06}.json", ck.iteration)))
            .map_err(|e| AppError::runtime(e.to_string()))?;
    }
    output
        .final_checkpoint()
        .save(&dir.join(format!("{tag}_final.json")))
        .map_err(|e| AppError::runtime(e.to_string()))?;
    write_text(
        &out.join(format!("train_log_{tag}.csv")),
        &harness::train::train_log_csv(&output.log),
    )?;
    let _ = cfg;
    Ok(())
}

pub fn load_final_checkpoint(out: &Path, tag: &str) -> Result<Checkpoint, AppError> {
    Checkpoint::load(&out.join("checkpoints").join(format!("{tag}_final.json")))
        .map_err(|e| AppError::runtime(e.to_string()))
}

/// Stage 5: the four-scenario comparison on held-out episodes, plus
/// plot-ready traces.
pub fn run_evaluate(
    cfg: &RunConfig,
    out: &Path,
    artifacts: Option<&TrainArtifacts>,
) -> Result<Vec<ScenarioReport>, AppError> {
    let emulator = load_emulator(out)?;
    let episodes = build_episodes(cfg, out)?;
    let env = EmuEnv {
        outflow: &emulator.outflow,
        level: &emulator.level,
        plant: &cfg.plant,
        reward: cfg.ppo.reward,
    };

    let reports = match artifacts {
        Some(a) => pumpstation::harness::evaluate_scenarios(
            &a.with_forecast,
            &a.without_forecast,
            &env,
            &episodes.test,
            cfg.harness.trailing_fraction,
        )
        .map_err(|e| AppError::runtime(e.to_string()))?,
        None => {
            // load final checkpoints from disk
            let with = load_final_checkpoint(out, "with_forecast")?;
            let without = load_final_checkpoint(out, "without_forecast")?;
            let mut reports = Vec::with_capacity(4);
            reports.push(harness::scenario::evaluate_baseline(&env, &episodes.test));
            reports.push(
                harness::scenario::evaluate_policy(
                    &without,
                    &env,
                    &episodes.test,
                    ForecastMode::Zeroed,
                    harness::ScenarioKind::NoForecast,
                )
                .map_err(|e| AppError::runtime(e.to_string()))?,
            );
            reports.push(
                harness::scenario::evaluate_policy(
                    &with,
                    &env,
                    &episodes.test,
                    ForecastMode::Probabilistic,
                    harness::ScenarioKind::WithForecast,
                )
                .map_err(|e| AppError::runtime(e.to_string()))?,
            );
            reports.push(
                harness::scenario::evaluate_policy(
                    &with,
                    &env,
                    &episodes.test,
                    ForecastMode::Perfect,
                    harness::ScenarioKind::PerfectForecast,
                )
                .map_err(|e| AppError::runtime(e.to_string()))?,
            );
            reports
        }
    };

    save_versioned(&out.join("scenario_reports.json"), REPORT_SCHEMA, &reports)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    write_text(
        &out.join("scenario_summary.csv"),
        &scenario_summary_csv(&reports),
    )?;
    write_plot_traces(cfg, out, &env, &episodes)?;
    Ok(reports)
}

/// Per-episode level and cumulative-energy traces for external plotting.
fn write_plot_traces(
    _cfg: &RunConfig,
    out: &Path,
    env: &EmuEnv,
    episodes: &EpisodeSets,
) -> Result<(), AppError> {
    let dir = out.join("plots");
    fs::create_dir_all(&dir).map_err(|e| AppError::runtime(e.to_string()))?;
    let baseline = harness::scenario::baseline_traces(env, &episodes.test);
    for trace in &baseline {
        write_text(
            &dir.join(format!("baseline_rules_ep{:03}.csv", trace.episode_id)),
            &harness::report::trace_csv(trace, env.plant.step_hours()),
        )?;
    }
    for (tag, mode) in [
        ("rl_with_forecasts", ForecastMode::Probabilistic),
        ("rl_without_forecasts", ForecastMode::Zeroed),
    ] {
        let file_tag = if tag == "rl_with_forecasts" {
            "with_forecast"
        } else {
            "without_forecast"
        };
        let Ok(ck) = load_final_checkpoint(out, file_tag) else {
            continue;
        };
        let traces = harness::scenario::scenario_traces(&ck, env, &episodes.test, mode)
            .map_err(|e| AppError::runtime(e.to_string()))?;
        for trace in &traces {
            write_text(
                &dir.join(format!("{tag}_ep{:03}.csv", trace.episode_id)),
                &harness::report::trace_csv(trace, env.plant.step_hours()),
            )?;
        }
    }
    Ok(())
}

/// Stage 6: the trade-off scan over reward weightings.
pub fn run_tradeoff(cfg: &RunConfig, out: &Path) -> Result<Vec<TradeoffEntry>, AppError> {
    let emulator = load_emulator(out)?;
    let episodes = build_episodes(cfg, out)?;
    let env = EmuEnv {
        outflow: &emulator.outflow,
        level: &emulator.level,
        plant: &cfg.plant,
        reward: cfg.ppo.reward,
    };
    let entries = tradeoff_scan(
        &WeightPair::standard_pairs(),
        &env,
        &episodes.train,
        &episodes.test,
        &cfg.ppo,
        &cfg.harness,
        cfg.master_seed(),
    )
    .map_err(|e| AppError::runtime(e.to_string()))?;

    let baseline = harness::scenario::evaluate_baseline(&env, &episodes.test);
    let mut all = vec![baseline];
    all.extend(entries.iter().map(|e| e.report.clone()));
    save_versioned(&out.join("tradeoff_reports.json"), REPORT_SCHEMA, &all)
        .map_err(|e| AppError::runtime(e.to_string()))?;
    write_text(&out.join("tradeoff_summary.csv"), &scenario_summary_csv(&all))?;
    Ok(entries)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrateReport {
    pub iterations: usize,
    pub all_rewards_finite: bool,
    pub final_mean_reward: f64,
}

/// Stage 7 (smoke): a short continuation of training where the emulated
/// dynamics are swapped for the ground-truth plant.
pub fn run_calibrate(cfg: &RunConfig, out: &Path, iterations: usize) -> Result<CalibrateReport, AppError> {
    let episodes = build_episodes(cfg, out)?;
    let outflow = OutflowModel::from_ground_truth(&cfg.plant);
    let level = LevelModel::from_ground_truth(cfg.plant.tank_area_m2, cfg.plant.step_minutes);
    let env = EmuEnv {
        outflow: &outflow,
        level: &level,
        plant: &cfg.plant,
        reward: cfg.ppo.reward,
    };
    let mut ppo = cfg.ppo.clone();
    ppo.iterations = iterations;
    let output = train(
        &env,
        &episodes.train,
        &episodes.test,
        ForecastMode::Probabilistic,
        &ppo,
        &cfg.harness,
        cfg.master_seed(),
        "agent/calibrate",
    )
    .map_err(|e| AppError::runtime(e.to_string()))?;
    let all_finite = output.log.iter().all(|r| r.mean_reward.is_finite());
    let report = CalibrateReport {
        iterations,
        all_rewards_finite: all_finite,
        final_mean_reward: output.log.last().map(|r| r.mean_reward).unwrap_or(0.0),
    };
    write_text(
        &out.join("calibrate_report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    if !all_finite {
        return Err(AppError::target_miss(
            "calibration smoke run produced non-finite rewards",
        ));
    }
    Ok(report)
}
