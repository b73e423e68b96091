//! Experiment runner: dataset generation, training with every baseline and
//! re-weighted scheme, standalone weight estimation, closed-form
//! verification, and run comparison reports.
//!
//! Exit codes: 0 success, 1 runtime error, 2 config error, 3 verification
//! failure (`oracle` only).

mod config;
mod oracle_cmd;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gblend_core::checkpoint;
use gblend_core::datagen::{self, Dataset};
use gblend_core::fusion::MultiHeadNet;
use gblend_core::ogr::{curves_to_csv, generalization_at, ogr_between, overfitting_at};
use gblend_core::rng::RngSeed;
use gblend_core::trainer::{
    baseline, gb_estimate, head_accuracy, offline_gblend, online_gblend, BaselineKind,
    RunContext, TrainLogs,
};
use gblend_core::Error;

use config::{DatasetSource, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gblend", version, about = "Multi-modal training with re-weighted head losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a config.
    GenData {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's top-level seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<String>,
    },
    /// Train one model and emit curves, weights, checkpoint, and summary.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: TrainMode,
        /// Modality index for `--mode uni`.
        #[arg(long, default_value_t = 0)]
        modality: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<String>,
    },
    /// Estimate blend weights from a checkpoint (standalone estimation).
    EstimateWeights {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Estimation window in epochs (default: the config's epoch budget).
        #[arg(long)]
        epochs: Option<usize>,
        /// Also write the weight record JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the closed-form weights and step approximations; exit 3 on
    /// tolerance failure.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare finished runs in a table (rows follow argument order).
    Report {
        dirs: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrainMode {
    Uni,
    Naive,
    Equal,
    Dropout,
    Pretrain,
    OfflineGblend,
    OnlineGblend,
}

impl TrainMode {
    fn name(&self) -> &'static str {
        match self {
            TrainMode::Uni => "uni",
            TrainMode::Naive => "naive",
            TrainMode::Equal => "equal",
            TrainMode::Dropout => "dropout",
            TrainMode::Pretrain => "pretrain",
            TrainMode::OfflineGblend => "offline-gblend",
            TrainMode::OnlineGblend => "online-gblend",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::GenData {
            config,
            seed,
            output_dir,
        } => {
            let config = load_with_overrides(&config, seed, output_dir)?;
            cmd_gen_data(&config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            config,
            mode,
            modality,
            seed,
            output_dir,
        } => {
            let config = load_with_overrides(&config, seed, output_dir)?;
            cmd_train(&config, mode, modality)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EstimateWeights {
            config,
            checkpoint,
            epochs,
            out,
        } => {
            let config = load_with_overrides(&config, None, None)?;
            cmd_estimate_weights(&config, &checkpoint, epochs, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, out } => oracle_cmd::cmd_oracle(&config, out.as_deref()),
        Command::Report { dirs, csv } => {
            if dirs.is_empty() {
                return Err(Error::Config("report needs at least one run directory".into()));
            }
            report::cmd_report(&dirs, csv.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Flags override top-level scalar fields only.
fn load_with_overrides(
    path: &Path,
    seed: Option<u64>,
    output_dir: Option<String>,
) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    config.train.seed = config.seed;
    Ok(config)
}

fn obtain_dataset(config: &ExperimentConfig) -> Result<Dataset, Error> {
    match &config.dataset {
        DatasetSource::Synthetic(spec) => datagen::gen_multimodal(spec),
        DatasetSource::Path(path) => datagen::load_dataset(Path::new(path)),
    }
}

fn cmd_gen_data(config: &ExperimentConfig) -> Result<(), Error> {
    let DatasetSource::Synthetic(spec) = &config.dataset else {
        return Err(Error::Config(
            "gen-data needs a synthetic dataset spec (field: dataset)".into(),
        ));
    };
    let dataset = datagen::gen_multimodal(spec)?;
    let dir = config.resolved_output_dir();
    datagen::save_dataset(&dataset, &dir)?;
    println!(
        "wrote {}: {} rows, {} classes, splits {}/{}/{}, modalities [{}]",
        dir.display(),
        dataset.rows(),
        dataset.class_count,
        dataset.splits.train.len(),
        dataset.splits.holdout.len(),
        dataset.splits.test.len(),
        dataset
            .modalities
            .iter()
            .map(|m| format!("{}:{}", m.id, m.features.cols()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn build_net(config: &ExperimentConfig, data: &Dataset) -> Result<MultiHeadNet, Error> {
    let mut rng = RngSeed(config.seed).derive("init").stream();
    MultiHeadNet::build(&config.arch, &data.modality_dims(), data.class_count, &mut rng)
}

#[derive(Serialize)]
struct Summary {
    format_version: u32,
    mode: String,
    seed: u64,
    epochs: usize,
    head_ids: Vec<String>,
    final_metrics: FinalMetrics,
    ogr_windows: Vec<OgrWindow>,
    weights_final: Vec<f64>,
}

#[derive(Serialize)]
struct FinalMetrics {
    train_acc: f64,
    val_acc: f64,
    test_acc: Option<f64>,
    train_val_gap: f64,
}

#[derive(Serialize)]
struct OgrWindow {
    start_epoch: usize,
    end_epoch: usize,
    delta_o: f64,
    delta_g: f64,
    ogr: Option<f64>,
}

fn fused_ogr_windows(config: &ExperimentConfig, logs: &TrainLogs) -> Vec<OgrWindow> {
    let fused = logs.head_records.last().expect("fused head records");
    let mut boundaries: Vec<usize> = logs.schedule.0.iter().map(|e| e.start_epoch).collect();
    boundaries.push(config.train.epochs);
    boundaries.dedup();
    let mut windows = Vec::new();
    for pair in boundaries.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let (Some(a), Some(b)) = (
            fused.iter().find(|r| r.epoch == start),
            fused.iter().find(|r| r.epoch == end),
        ) else {
            continue;
        };
        if let Ok(win) = ogr_between(a, b, config.train.metric) {
            windows.push(OgrWindow {
                start_epoch: start,
                end_epoch: end,
                delta_o: win.delta_o,
                delta_g: win.delta_g,
                ogr: win.ogr,
            });
        }
    }
    if windows.is_empty() {
        if let (Some(a), Some(b)) = (fused.first(), fused.last()) {
            if b.epoch > a.epoch {
                windows.push(OgrWindow {
                    start_epoch: a.epoch,
                    end_epoch: b.epoch,
                    delta_o: overfitting_at(a, b, config.train.metric),
                    delta_g: generalization_at(a, b, config.train.metric),
                    ogr: None,
                });
            }
        }
    }
    windows
}

fn cmd_train(config: &ExperimentConfig, mode: TrainMode, modality: usize) -> Result<(), Error> {
    let data = obtain_dataset(config)?;
    let mut net = build_net(config, &data)?;
    let cfg = &config.train;
    let logs = match mode {
        TrainMode::Uni => baseline(BaselineKind::UniModal(modality), &mut net, &data, cfg)?,
        TrainMode::Naive => baseline(BaselineKind::NaiveJoint, &mut net, &data, cfg)?,
        TrainMode::Equal => baseline(BaselineKind::EqualWeights, &mut net, &data, cfg)?,
        TrainMode::Dropout => {
            if config.arch.dropout <= 0.0 {
                return Err(Error::Config(
                    "mode=dropout needs arch.dropout > 0 (field: arch.dropout)".into(),
                ));
            }
            baseline(BaselineKind::Dropout(config.arch.dropout), &mut net, &data, cfg)?
        }
        TrainMode::Pretrain => baseline(BaselineKind::PretrainFinetune, &mut net, &data, cfg)?,
        TrainMode::OfflineGblend => offline_gblend(&mut net, &data, cfg)?,
        TrainMode::OnlineGblend => online_gblend(&mut net, &data, cfg)?,
    };

    let dir = config.resolved_output_dir();
    fs::create_dir_all(&dir)?;
    fs::write(
        dir.join("curves.csv"),
        curves_to_csv(&logs.head_ids, &logs.head_records, cfg.metric),
    )?;
    fs::write(
        dir.join("schedule.json"),
        serde_json::to_string_pretty(&logs.schedule)?,
    )?;
    if !logs.estimates.is_empty() {
        fs::write(
            dir.join("weights.json"),
            serde_json::to_string_pretty(&logs.estimates)?,
        )?;
    }
    checkpoint::save_net(&net, &dir.join("checkpoint.json"))?;

    // the reported head: the trained modality head for uni runs, the fused
    // head otherwise
    let head = match mode {
        TrainMode::Uni => modality,
        _ => logs.head_ids.len() - 1,
    };
    let last = logs.head_records[head].last().expect("records");
    let ctx = RunContext::new(&data, cfg)?;
    let test_acc = if ctx.test.is_empty() {
        None
    } else {
        Some(head_accuracy(&net, &data, &ctx.test, head)?)
    };
    let summary = Summary {
        format_version: 1,
        mode: mode.name().to_string(),
        seed: config.seed,
        epochs: cfg.epochs,
        head_ids: logs.head_ids.clone(),
        final_metrics: FinalMetrics {
            train_acc: last.train_acc,
            val_acc: last.val_acc,
            test_acc,
            train_val_gap: last.train_acc - last.val_acc,
        },
        ogr_windows: fused_ogr_windows(config, &logs),
        weights_final: logs
            .schedule
            .0
            .last()
            .map(|e| e.weights.clone())
            .unwrap_or_default(),
    };
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{}: train {:.4} val {:.4}{} -> {}",
        mode.name(),
        summary.final_metrics.train_acc,
        summary.final_metrics.val_acc,
        summary
            .final_metrics
            .test_acc
            .map(|t| format!(" test {:.4}", t))
            .unwrap_or_default(),
        dir.display()
    );
    Ok(())
}

fn cmd_estimate_weights(
    config: &ExperimentConfig,
    checkpoint_path: &Path,
    epochs: Option<usize>,
    out: Option<&Path>,
) -> Result<(), Error> {
    let data = obtain_dataset(config)?;
    let net = checkpoint::load_net(checkpoint_path)?;
    let window = epochs.unwrap_or(config.train.epochs);
    let (_, record) = gb_estimate(&net, &data, window, &config.train, 0)?;
    let json = serde_json::to_string_pretty(&record)?;
    println!("{}", json);
    if let Some(path) = out {
        fs::write(path, json)?;
    }
    Ok(())
}
