//! Training loops: plain blended training, per-head weight estimation from
//! checkpoint clones, offline and online re-weighted training, and the
//! baseline family (uni-modal, naive joint, equal weights, dropout,
//! pretrain-finetune).
//!
//! Determinism contract: every stream is derived from the run seed and a
//! label (epoch index, estimation head, pretrain arm), so estimation clones
//! and parallel execution never perturb the main trajectory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blend::{estimate_weights_practical, HeadEstimate, HeadMeasurement, WeightEstimateRecord};
use crate::datagen::{Dataset, Labels};
use crate::error::{Error, Result};
use crate::fusion::{blended_loss, BlendWeights, MultiHeadNet};
use crate::nn::loss::cross_entropy;
use crate::nn::optim::{OptimizerSpec, OptimizerState};
use crate::ogr::{
    generalization_at, mean_average_precision, overfitting_at, top1_accuracy, CheckpointRecord,
    MetricKind,
};
use crate::rng::RngSeed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Fixed-weight span between online re-estimations.
    pub super_epoch: usize,
    /// Length of the first (warmup) super-epoch.
    pub warmup: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    /// Metric used for the O/G measurements feeding weight estimation.
    pub metric: MetricKind,
    /// Fraction of train rows carved out as holdout when the dataset has no
    /// holdout split of its own.
    pub holdout_fraction: f64,
    /// Fraction of train rows forming the fixed train-side probe T'.
    pub tprime_fraction: f64,
    /// Fraction of train rows estimation clones train on (1 = all).
    pub estimation_subsample: f64,
    /// Root seed; experiment configs may omit it and set it from the
    /// experiment-level seed.
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.super_epoch == 0 || self.warmup == 0 {
            return Err(Error::Config("super_epoch and warmup must be positive".into()));
        }
        if self.super_epoch > self.epochs {
            return Err(Error::Config(
                "super_epoch cannot exceed the epoch budget".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        for (name, f) in [
            ("holdout_fraction", self.holdout_fraction),
            ("tprime_fraction", self.tprime_fraction),
            ("estimation_subsample", self.estimation_subsample),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{} must lie in (0,1]", name)));
            }
        }
        self.optimizer.validate()
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            super_epoch: 5,
            warmup: 10,
            batch_size: 64,
            optimizer: OptimizerSpec::sgd(0.05, 0.9),
            metric: MetricKind::Loss,
            holdout_fraction: 0.1,
            tprime_fraction: 0.1,
            estimation_subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightScheduleEntry {
    pub start_epoch: usize,
    pub weights: Vec<f64>,
}

/// Piecewise-constant weight schedule; entries strictly increase and the
/// first starts at epoch 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightSchedule(pub Vec<WeightScheduleEntry>);

impl WeightSchedule {
    fn push(&mut self, start_epoch: usize, weights: &BlendWeights) {
        debug_assert!(
            self.0.is_empty() && start_epoch == 0
                || self.0.last().map(|e| e.start_epoch < start_epoch).unwrap_or(false)
        );
        self.0.push(WeightScheduleEntry {
            start_epoch,
            weights: weights.as_slice().to_vec(),
        });
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogs {
    pub head_ids: Vec<String>,
    /// One record series per head (index k = fused); the first record is the
    /// pre-training snapshot, then exactly one record per trained epoch.
    pub head_records: Vec<Vec<CheckpointRecord>>,
    pub schedule: WeightSchedule,
    pub estimates: Vec<WeightEstimateRecord>,
}

/// Resolved row-index sets for one run.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub train: Vec<u32>,
    pub holdout: Vec<u32>,
    pub test: Vec<u32>,
    pub tprime: Vec<u32>,
}

impl RunContext {
    /// Builds index sets from the dataset's split tags. When the dataset has
    /// no holdout split, one is carved from the train rows. T' is a fixed
    /// seeded subsample of the train rows, never resampled.
    pub fn new(data: &Dataset, cfg: &TrainConfig) -> Result<RunContext> {
        let mut train = data.splits.train.clone();
        let mut holdout = data.splits.holdout.clone();
        if train.is_empty() {
            return Err(Error::InvalidArgument("dataset has no train rows".into()));
        }
        if holdout.is_empty() {
            let mut rng = RngSeed(cfg.seed).derive("carve-holdout").stream();
            let mut pool = train.clone();
            use rand::seq::SliceRandom;
            pool.shuffle(&mut rng);
            let n_holdout = ((cfg.holdout_fraction * pool.len() as f64).round() as usize).max(1);
            holdout = pool[..n_holdout].to_vec();
            train = pool[n_holdout..].to_vec();
            holdout.sort_unstable();
            train.sort_unstable();
        }
        let tprime = if cfg.tprime_fraction >= 1.0 {
            train.clone()
        } else {
            let mut rng = RngSeed(cfg.seed).derive("tprime").stream();
            let mut pool = train.clone();
            use rand::seq::SliceRandom;
            pool.shuffle(&mut rng);
            let n = ((cfg.tprime_fraction * pool.len() as f64).round() as usize).max(1);
            let mut t: Vec<u32> = pool[..n].to_vec();
            t.sort_unstable();
            t
        };
        Ok(RunContext {
            train,
            holdout,
            test: data.splits.test.clone(),
            tprime,
        })
    }
}

struct SegmentOptions<'a> {
    stream_label: &'a str,
    freeze_encoders: bool,
}

/// Per-head loss and accuracy of the network on a row subset. Accuracy is
/// top-1 for single-label data and mAP for multi-hot data, both computed on
/// raw logits.
fn eval_heads(
    net: &MultiHeadNet,
    data: &Dataset,
    indices: &[u32],
    batch_size: usize,
) -> Result<Vec<(f64, f64)>> {
    let heads = net.head_count();
    let rows = indices.len();
    if rows == 0 {
        return Err(Error::InvalidArgument("empty evaluation subset".into()));
    }
    let mut losses = vec![0.0; heads];
    let mut logits_all: Vec<Vec<f64>> = vec![Vec::new(); heads];
    let mut label_store: Vec<u32> = Vec::new();
    let mut hot_store: Vec<u8> = Vec::new();
    for chunk in indices.chunks(batch_size) {
        let batch = data.batch(chunk)?;
        let (logits, _) = net.forward_all_heads(&batch.inputs, false, None)?;
        for (h, l) in logits.iter().enumerate() {
            let (loss, _) = cross_entropy(l, batch.labels.view())?;
            losses[h] += loss * chunk.len() as f64;
            logits_all[h].extend_from_slice(l.data());
        }
        match &batch.labels {
            Labels::Single(v) => label_store.extend_from_slice(v),
            Labels::Multi { hot, .. } => hot_store.extend_from_slice(hot),
        }
    }
    let classes = net.class_count;
    let mut out = Vec::with_capacity(heads);
    for h in 0..heads {
        let loss = losses[h] / rows as f64;
        let logits = Tensor::from_vec(vec![rows, classes], std::mem::take(&mut logits_all[h]))?;
        let acc = if data.labels.is_multi() {
            mean_average_precision(&logits, &hot_store, classes)?
        } else {
            top1_accuracy(&logits, &label_store)?
        };
        out.push((loss, acc));
    }
    Ok(out)
}

fn snapshot_records(
    net: &MultiHeadNet,
    data: &Dataset,
    ctx: &RunContext,
    epoch: usize,
    batch_size: usize,
) -> Result<Vec<CheckpointRecord>> {
    let train_side = eval_heads(net, data, &ctx.tprime, batch_size)?;
    let val_side = eval_heads(net, data, &ctx.holdout, batch_size)?;
    Ok(train_side
        .iter()
        .zip(&val_side)
        .map(|(&(tl, ta), &(vl, va))| CheckpointRecord {
            epoch,
            train_loss: tl,
            val_loss: vl,
            train_acc: ta,
            val_acc: va,
        })
        .collect())
}

/// Trains `epochs` epochs of minibatch SGD on the blended loss over the
/// absolute epoch range starting at `start_epoch`, appending one record per
/// head per epoch.
#[allow(clippy::too_many_arguments)]
fn train_segment(
    net: &mut MultiHeadNet,
    opt: &mut OptimizerState,
    data: &Dataset,
    ctx: &RunContext,
    weights: &BlendWeights,
    start_epoch: usize,
    epochs: usize,
    cfg: &TrainConfig,
    options: &SegmentOptions<'_>,
    records: &mut [Vec<CheckpointRecord>],
) -> Result<()> {
    let labels = net.param_labels();
    use rand::seq::SliceRandom;
    for e in 0..epochs {
        let abs_epoch = start_epoch + e;
        let mut rng = RngSeed(cfg.seed)
            .derive(&format!("{}:epoch:{}", options.stream_label, abs_epoch))
            .stream();
        let mut order = ctx.train.clone();
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.batch(chunk)?;
            let (logits, caches) = net.forward_all_heads(&batch.inputs, true, Some(&mut rng))?;
            let (_, _, grad_logits) = blended_loss(&logits, batch.labels.view(), weights)?;
            let mut grads = net.backward_blended(&caches, &grad_logits, weights)?;
            if options.freeze_encoders {
                for enc in &mut grads.encoders {
                    enc.scale(0.0);
                }
                for head in &mut grads.heads {
                    head.scale(0.0);
                }
            }
            net.apply_step(opt, &grads, &labels)
                .map_err(|err| Error::Numeric(format!("epoch {}: {}", abs_epoch, err)))?;
        }
        let snapshot = snapshot_records(net, data, ctx, abs_epoch + 1, cfg.batch_size)?;
        for (series, rec) in records.iter_mut().zip(snapshot) {
            series.push(rec);
        }
    }
    Ok(())
}

fn init_records(
    net: &MultiHeadNet,
    data: &Dataset,
    ctx: &RunContext,
    start_epoch: usize,
    batch_size: usize,
) -> Result<Vec<Vec<CheckpointRecord>>> {
    let snapshot = snapshot_records(net, data, ctx, start_epoch, batch_size)?;
    Ok(snapshot.into_iter().map(|r| vec![r]).collect())
}

/// Runs minibatch training on the blended loss with fixed weights. Records
/// are logged per head on T' and the holdout each epoch; the first entry is
/// the pre-training snapshot.
pub fn train_epochs(
    net: &mut MultiHeadNet,
    data: &Dataset,
    weights: &BlendWeights,
    epochs: usize,
    cfg: &TrainConfig,
) -> Result<TrainLogs> {
    cfg.validate()?;
    if weights.len() != net.head_count() {
        return Err(Error::Shape {
            context: "train_epochs",
            detail: format!(
                "{} weights for {} heads",
                weights.len(),
                net.head_count()
            ),
        });
    }
    let ctx = RunContext::new(data, cfg)?;
    let mut opt = OptimizerState::new(cfg.optimizer, &net.param_shapes())?;
    let mut records = init_records(net, data, &ctx, 0, cfg.batch_size)?;
    train_segment(
        net,
        &mut opt,
        data,
        &ctx,
        weights,
        0,
        epochs,
        cfg,
        &SegmentOptions {
            stream_label: "main",
            freeze_encoders: false,
        },
        &mut records,
    )?;
    let mut schedule = WeightSchedule::default();
    schedule.push(0, weights);
    Ok(TrainLogs {
        head_ids: net.head_ids(),
        head_records: records,
        schedule,
        estimates: Vec::new(),
    })
}

/// Seeded subsample of the train rows for estimation clones: a shuffled
/// prefix, so smaller fractions nest inside larger ones.
fn estimation_train_indices(ctx: &RunContext, cfg: &TrainConfig) -> Vec<u32> {
    if cfg.estimation_subsample >= 1.0 {
        return ctx.train.clone();
    }
    use rand::seq::SliceRandom;
    let mut rng = RngSeed(cfg.seed).derive("est-sub").stream();
    let mut pool = ctx.train.clone();
    pool.shuffle(&mut rng);
    let n = ((cfg.estimation_subsample * pool.len() as f64).ceil() as usize).max(1);
    let mut sub = pool[..n].to_vec();
    sub.sort_unstable();
    sub
}

/// Per-head weight estimation from a checkpoint: each head's sub-network is
/// cloned from the checkpoint parameters, trained alone for `epochs` epochs
/// (one-hot loss weight), and its overfitting O and generalization G over
/// the window are measured on the holdout and T'. Weights come out
/// proportional to G/O². The input network is untouched; clones get fresh
/// optimizer state and their own derived streams keyed by head index, so
/// the parallel estimation matches serial execution.
pub fn gb_estimate(
    net: &MultiHeadNet,
    data: &Dataset,
    epochs: usize,
    cfg: &TrainConfig,
    start_epoch: usize,
) -> Result<(BlendWeights, WeightEstimateRecord)> {
    cfg.validate()?;
    if epochs == 0 {
        return Err(Error::InvalidArgument(
            "estimation window must be at least one epoch".into(),
        ));
    }
    let ctx = RunContext::new(data, cfg)?;
    let est_ctx = RunContext {
        train: estimation_train_indices(&ctx, cfg),
        holdout: ctx.holdout.clone(),
        test: ctx.test.clone(),
        tprime: ctx.tprime.clone(),
    };
    let heads = net.head_count();
    let head_ids = net.head_ids();
    let results: Result<Vec<(f64, f64)>> = (0..heads)
        .into_par_iter()
        .map(|head| {
            let mut clone = net.clone();
            let mut opt = OptimizerState::new(cfg.optimizer, &clone.param_shapes())?;
            let mut records = init_records(&clone, data, &est_ctx, start_epoch, cfg.batch_size)?;
            let label = format!("estimate:{}:head:{}", start_epoch, head);
            train_segment(
                &mut clone,
                &mut opt,
                data,
                &est_ctx,
                &BlendWeights::one_hot(heads, head),
                start_epoch,
                epochs,
                cfg,
                &SegmentOptions {
                    stream_label: &label,
                    freeze_encoders: false,
                },
                &mut records,
            )?;
            let series = &records[head];
            let first = &series[0];
            let last = &series[epochs];
            Ok((
                generalization_at(first, last, cfg.metric),
                overfitting_at(first, last, cfg.metric),
            ))
        })
        .collect();
    let measurements: Vec<HeadMeasurement> = results?
        .into_iter()
        .zip(&head_ids)
        .map(|((g, o), id)| HeadMeasurement {
            head_id: id.clone(),
            g,
            o,
        })
        .collect();
    let (weights, raw) = estimate_weights_practical(&measurements)?;
    let record = WeightEstimateRecord {
        epoch: start_epoch,
        heads: measurements
            .iter()
            .zip(&raw)
            .zip(weights.as_slice())
            .map(|((m, &raw), &weight)| HeadEstimate {
                id: m.head_id.clone(),
                g: m.g,
                o: m.o,
                raw,
                weight,
            })
            .collect(),
    };
    Ok((weights, record))
}

/// Offline re-weighted training: estimate weights once from the fresh
/// network over the full epoch budget, then train with them fixed.
pub fn offline_gblend(net: &mut MultiHeadNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainLogs> {
    cfg.validate()?;
    let (weights, estimate) = gb_estimate(net, data, cfg.epochs, cfg, 0)?;
    let mut logs = train_epochs(net, data, &weights, cfg.epochs, cfg)?;
    logs.estimates = vec![estimate];
    Ok(logs)
}

fn super_epoch_lengths(cfg: &TrainConfig) -> Vec<usize> {
    let mut lengths = Vec::new();
    let mut done = cfg.warmup.min(cfg.epochs);
    lengths.push(done);
    while done < cfg.epochs {
        let len = cfg.super_epoch.min(cfg.epochs - done);
        lengths.push(len);
        done += len;
    }
    lengths
}

/// Online re-weighted training: before each super-epoch (warmup length
/// first, then the configured span, remainder as a short final span),
/// weights are re-estimated from the current checkpoint over that span, then
/// training continues with them. Optimizer state persists across spans.
pub fn online_gblend(net: &mut MultiHeadNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainLogs> {
    cfg.validate()?;
    let ctx = RunContext::new(data, cfg)?;
    let mut opt = OptimizerState::new(cfg.optimizer, &net.param_shapes())?;
    let mut records = init_records(net, data, &ctx, 0, cfg.batch_size)?;
    let mut schedule = WeightSchedule::default();
    let mut estimates = Vec::new();
    let mut cursor = 0usize;
    for len in super_epoch_lengths(cfg) {
        let (weights, estimate) = gb_estimate(net, data, len, cfg, cursor)?;
        schedule.push(cursor, &weights);
        estimates.push(estimate);
        train_segment(
            net,
            &mut opt,
            data,
            &ctx,
            &weights,
            cursor,
            len,
            cfg,
            &SegmentOptions {
                stream_label: "main",
                freeze_encoders: false,
            },
            &mut records,
        )?;
        cursor += len;
    }
    Ok(TrainLogs {
        head_ids: net.head_ids(),
        head_records: records,
        schedule,
        estimates,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaselineKind {
    /// Train encoder i + head i alone.
    UniModal(usize),
    /// One-hot weight on the fused head.
    NaiveJoint,
    /// Uniform weights over all k+1 heads.
    EqualWeights,
    /// Naive joint training with dropout at the concatenation layer.
    Dropout(f64),
    /// Train each encoder uni-modally for the epoch budget, copy the trained
    /// encoders (and their heads) in, then finetune everything with the
    /// fused loss; nothing is frozen.
    PretrainFinetune,
}

pub fn baseline(
    kind: BaselineKind,
    net: &mut MultiHeadNet,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainLogs> {
    cfg.validate()?;
    let heads = net.head_count();
    match kind {
        BaselineKind::UniModal(i) => {
            if i >= net.modality_count() {
                return Err(Error::InvalidArgument(format!(
                    "modality {} out of {}",
                    i,
                    net.modality_count()
                )));
            }
            train_epochs(net, data, &BlendWeights::one_hot(heads, i), cfg.epochs, cfg)
        }
        BaselineKind::NaiveJoint => {
            train_epochs(net, data, &BlendWeights::one_hot(heads, heads - 1), cfg.epochs, cfg)
        }
        BaselineKind::EqualWeights => {
            train_epochs(net, data, &BlendWeights::uniform(heads), cfg.epochs, cfg)
        }
        BaselineKind::Dropout(rate) => {
            if rate > 0.0 {
                net.fusion_head.set_dropout(rate, 0)?;
            }
            train_epochs(net, data, &BlendWeights::one_hot(heads, heads - 1), cfg.epochs, cfg)
        }
        BaselineKind::PretrainFinetune => {
            let ctx = RunContext::new(data, cfg)?;
            for i in 0..net.modality_count() {
                let mut arm = net.clone();
                let mut opt = OptimizerState::new(cfg.optimizer, &arm.param_shapes())?;
                let mut records = init_records(&arm, data, &ctx, 0, cfg.batch_size)?;
                let label = format!("pretrain:{}", i);
                train_segment(
                    &mut arm,
                    &mut opt,
                    data,
                    &ctx,
                    &BlendWeights::one_hot(heads, i),
                    0,
                    cfg.epochs,
                    cfg,
                    &SegmentOptions {
                        stream_label: &label,
                        freeze_encoders: false,
                    },
                    &mut records,
                )?;
                net.encoders[i] = arm.encoders[i].clone();
                net.heads[i] = arm.heads[i].clone();
            }
            let mut opt = OptimizerState::new(cfg.optimizer, &net.param_shapes())?;
            let mut records = init_records(net, data, &ctx, 0, cfg.batch_size)?;
            train_segment(
                net,
                &mut opt,
                data,
                &ctx,
                &BlendWeights::one_hot(heads, heads - 1),
                0,
                cfg.epochs,
                cfg,
                &SegmentOptions {
                    stream_label: "finetune",
                    freeze_encoders: false,
                },
                &mut records,
            )?;
            let mut schedule = WeightSchedule::default();
            schedule.push(0, &BlendWeights::one_hot(heads, heads - 1));
            Ok(TrainLogs {
                head_ids: net.head_ids(),
                head_records: records,
                schedule,
                estimates: Vec::new(),
            })
        }
    }
}

/// Fused-head accuracy on a row subset: top-1 for single-label data, mAP for
/// multi-hot.
pub fn fused_accuracy(net: &MultiHeadNet, data: &Dataset, indices: &[u32]) -> Result<f64> {
    let evals = eval_heads(net, data, indices, 256)?;
    Ok(evals.last().expect("fused head").1)
}

/// Accuracy of one head on a row subset (index k = fused).
pub fn head_accuracy(net: &MultiHeadNet, data: &Dataset, indices: &[u32], head: usize) -> Result<f64> {
    let evals = eval_heads(net, data, indices, 256)?;
    evals
        .get(head)
        .map(|&(_, acc)| acc)
        .ok_or_else(|| Error::InvalidArgument(format!("head {} out of range", head)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperEpochComparison {
    pub start_epoch: usize,
    pub length: usize,
    pub weights: Vec<f64>,
    pub gblend_val_acc: f64,
    pub naive_val_acc: f64,
}

/// Paired per-super-epoch comparison: from each shared checkpoint of an
/// online run, one arm trains the span with the estimated weights and the
/// other with the naive one-hot fused weight, sharing epoch streams. Both
/// then get a short fused-classifier-only calibration pass (frozen trunks)
/// before fused-head holdout accuracy is compared, and the run continues
/// from the re-weighted arm.
pub fn paired_super_epoch_comparison(
    net: &mut MultiHeadNet,
    data: &Dataset,
    cfg: &TrainConfig,
    calibration_epochs: usize,
) -> Result<Vec<SuperEpochComparison>> {
    cfg.validate()?;
    let ctx = RunContext::new(data, cfg)?;
    let heads = net.head_count();
    let naive = BlendWeights::one_hot(heads, heads - 1);
    let mut opt = OptimizerState::new(cfg.optimizer, &net.param_shapes())?;
    let mut records = init_records(net, data, &ctx, 0, cfg.batch_size)?;
    let mut comparisons = Vec::new();
    let mut cursor = 0usize;

    let calibrate = |arm: &MultiHeadNet, arm_opt: &OptimizerState, start: usize| -> Result<f64> {
        let mut tuned = arm.clone();
        if calibration_epochs > 0 {
            let mut tuned_opt = arm_opt.clone();
            let mut recs = init_records(&tuned, data, &ctx, start, cfg.batch_size)?;
            let label = format!("calibrate:{}", start);
            let fused_only = BlendWeights::one_hot(tuned.head_count(), tuned.head_count() - 1);
            train_segment(
                &mut tuned,
                &mut tuned_opt,
                data,
                &ctx,
                &fused_only,
                start,
                calibration_epochs,
                cfg,
                &SegmentOptions {
                    stream_label: &label,
                    freeze_encoders: true,
                },
                &mut recs,
            )?;
        }
        fused_accuracy(&tuned, data, &ctx.holdout)
    };

    for len in super_epoch_lengths(cfg) {
        let (weights, _) = gb_estimate(net, data, len, cfg, cursor)?;

        let mut naive_arm = net.clone();
        let mut naive_opt = opt.clone();
        let mut naive_records = records.clone();
        train_segment(
            &mut naive_arm,
            &mut naive_opt,
            data,
            &ctx,
            &naive,
            cursor,
            len,
            cfg,
            &SegmentOptions {
                stream_label: "main",
                freeze_encoders: false,
            },
            &mut naive_records,
        )?;

        train_segment(
            net,
            &mut opt,
            data,
            &ctx,
            &weights,
            cursor,
            len,
            cfg,
            &SegmentOptions {
                stream_label: "main",
                freeze_encoders: false,
            },
            &mut records,
        )?;

        let gblend_val_acc = calibrate(net, &opt, cursor + len)?;
        let naive_val_acc = calibrate(&naive_arm, &naive_opt, cursor + len)?;
        comparisons.push(SuperEpochComparison {
            start_epoch: cursor,
            length: len,
            weights: weights.as_slice().to_vec(),
            gblend_val_acc,
            naive_val_acc,
        });
        cursor += len;
    }
    Ok(comparisons)
}
