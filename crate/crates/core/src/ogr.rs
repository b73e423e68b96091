//! Overfitting and generalization bookkeeping.
//!
//! Between two checkpoints, generalization G is the gain on the held-out
//! set and overfitting O is the train-side gain that did not generalize.
//! Their ratio |ΔO/ΔG| scores the quality of the learned information:
//! with cross-entropy it is the bits memorized per bit generalized. Both a
//! loss variant and an accuracy variant are supported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Guard below which ΔG is treated as zero and the ratio as undefined.
pub const DELTA_G_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Loss,
    Accuracy,
}

/// Per-epoch snapshot of one head's train-probe and holdout metrics.
///
/// Train-side numbers are measured on the fixed probe subset T' and
/// validation numbers on the holdout V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

impl CheckpointRecord {
    pub fn validate(&self) -> Result<()> {
        if self.train_loss < 0.0 || self.val_loss < 0.0 {
            return Err(Error::InvalidArgument("losses must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.train_acc) || !(0.0..=1.0).contains(&self.val_acc) {
            return Err(Error::InvalidArgument("accuracies must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// ΔO, ΔG, and their ratio over a checkpoint window. `ogr` is `None` when
/// |ΔG| falls below [`DELTA_G_EPSILON`]; `delta_g < 0` marks a head whose
/// validation metric worsened (consumed by the weight estimator's clamping).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OgrReport {
    pub delta_o: f64,
    pub delta_g: f64,
    pub ogr: Option<f64>,
    pub metric: MetricKind,
}

/// Overfitting accumulated from `rec0` to `recn`: the train-side gain minus
/// the validation-side gain.
pub fn overfitting_at(rec0: &CheckpointRecord, recn: &CheckpointRecord, metric: MetricKind) -> f64 {
    match metric {
        MetricKind::Loss => {
            (rec0.train_loss - recn.train_loss) - (rec0.val_loss - recn.val_loss)
        }
        MetricKind::Accuracy => {
            (recn.train_acc - rec0.train_acc) - (recn.val_acc - rec0.val_acc)
        }
    }
}

/// Generalization accumulated from `rec0` to `recn`: the validation gain.
pub fn generalization_at(
    rec0: &CheckpointRecord,
    recn: &CheckpointRecord,
    metric: MetricKind,
) -> f64 {
    match metric {
        MetricKind::Loss => rec0.val_loss - recn.val_loss,
        MetricKind::Accuracy => recn.val_acc - rec0.val_acc,
    }
}

/// OGR over the window `[rec_a, rec_b]`. Since O and G telescope, the deltas
/// between two checkpoints need no epoch-zero anchor.
pub fn ogr_between(
    rec_a: &CheckpointRecord,
    rec_b: &CheckpointRecord,
    metric: MetricKind,
) -> Result<OgrReport> {
    if rec_b.epoch <= rec_a.epoch {
        return Err(Error::InvalidArgument(format!(
            "ogr window must move forward: epochs {} -> {}",
            rec_a.epoch, rec_b.epoch
        )));
    }
    let delta_o = overfitting_at(rec_a, rec_b, metric);
    let delta_g = generalization_at(rec_a, rec_b, metric);
    let ogr = if delta_g.abs() < DELTA_G_EPSILON {
        None
    } else {
        Some((delta_o / delta_g).abs())
    };
    Ok(OgrReport {
        delta_o,
        delta_g,
        ogr,
        metric,
    })
}

/// Top-1 accuracy of class scores against index labels. Ties break toward
/// the lowest class index.
pub fn top1_accuracy(scores: &Tensor, labels: &[u32]) -> Result<f64> {
    if scores.rows() != labels.len() {
        return Err(Error::Shape {
            context: "top1_accuracy",
            detail: format!("{} rows vs {} labels", scores.rows(), labels.len()),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut hits = 0usize;
    for (r, &y) in labels.iter().enumerate() {
        let row = scores.row(r);
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best == y as usize {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Average precision of one class: mean of precision@k over the positive
/// ranks, scores sorted descending with ties broken by row order.
fn average_precision(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let positives = relevant.iter().filter(|&&r| r).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if relevant[idx] {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(ap / positives as f64)
}

/// Mean average precision over classes for multi-hot labels. Classes without
/// positives in the evaluated rows are skipped.
pub fn mean_average_precision(scores: &Tensor, hot: &[u8], classes: usize) -> Result<f64> {
    let rows = scores.rows();
    if scores.cols() != classes || hot.len() != rows * classes {
        return Err(Error::Shape {
            context: "mean_average_precision",
            detail: format!(
                "scores {:?} vs {} classes, {} hot entries",
                scores.shape(),
                classes,
                hot.len()
            ),
        });
    }
    if rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for c in 0..classes {
        let col: Vec<f64> = (0..rows).map(|r| scores.at(r, c)).collect();
        let rel: Vec<bool> = (0..rows).map(|r| hot[r * classes + c] != 0).collect();
        if let Some(ap) = average_precision(&col, &rel) {
            total += ap;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::InvalidArgument(
            "no class has a positive example".into(),
        ));
    }
    Ok(total / counted as f64)
}

/// Renders per-head learning curves as CSV. O and G columns are measured
/// from each head's first record under the given metric.
pub fn curves_to_csv(
    head_ids: &[String],
    records: &[Vec<CheckpointRecord>],
    metric: MetricKind,
) -> String {
    let mut out = String::from("epoch,head,train_loss,val_loss,train_acc,val_acc,o,g\n");
    for (head, recs) in head_ids.iter().zip(records) {
        let Some(first) = recs.first() else { continue };
        for r in recs {
            let o = overfitting_at(first, r, metric);
            let g = generalization_at(first, r, metric);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.epoch, head, r.train_loss, r.val_loss, r.train_acc, r.val_acc, o, g
            ));
        }
    }
    out
}
