//! Classification losses: softmax cross-entropy for single-label targets and
//! per-class sigmoid cross-entropy for multi-hot targets. Both return the
//! batch-mean loss together with the gradient w.r.t. the logits.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Borrowed view over batch labels.
#[derive(Clone, Copy, Debug)]
pub enum LabelsView<'a> {
    /// Class index per row.
    Single(&'a [u32]),
    /// Row-major multi-hot matrix, `classes` entries per row (0 or 1).
    Multi { hot: &'a [u8], classes: usize },
}

impl LabelsView<'_> {
    pub fn rows(&self) -> usize {
        match self {
            LabelsView::Single(v) => v.len(),
            LabelsView::Multi { hot, classes } => hot.len() / classes,
        }
    }
}

/// Row-wise stable softmax.
pub fn softmax(logits: &Tensor) -> Tensor {
    let (rows, cols) = (logits.rows(), logits.cols());
    let mut out = Tensor::zeros(&[rows, cols]);
    for r in 0..rows {
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for c in 0..cols {
            let e = (row[c] - max).exp();
            out.set(r, c, e);
            sum += e;
        }
        for c in 0..cols {
            let v = out.at(r, c) / sum;
            out.set(r, c, v);
        }
    }
    out
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean softmax cross-entropy over the batch. The gradient is the analytic
/// `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[u32]) -> Result<(f64, Tensor)> {
    if logits.shape().len() != 2 {
        return Err(Error::Shape {
            context: "softmax_cross_entropy",
            detail: format!("logits shape {:?}", logits.shape()),
        });
    }
    let (rows, cols) = (logits.rows(), logits.cols());
    if rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if labels.len() != rows {
        return Err(Error::Shape {
            context: "softmax_cross_entropy",
            detail: format!("{} labels for {} rows", labels.len(), rows),
        });
    }
    let mut loss = 0.0;
    let mut grad = softmax(logits);
    for r in 0..rows {
        let y = labels[r] as usize;
        if y >= cols {
            return Err(Error::InvalidArgument(format!(
                "label {} out of {} classes",
                y, cols
            )));
        }
        loss += log_sum_exp(logits.row(r)) - logits.at(r, y);
        let v = grad.at(r, y) - 1.0;
        grad.set(r, y, v);
    }
    grad.scale(1.0 / rows as f64);
    Ok((loss / rows as f64, grad))
}

/// Per-class sigmoid cross-entropy averaged over classes and batch, for
/// multi-hot targets. Gradient is `(sigmoid(z) − y) / (batch · classes)`.
pub fn sigmoid_cross_entropy(logits: &Tensor, hot: &[u8], classes: usize) -> Result<(f64, Tensor)> {
    let (rows, cols) = (logits.rows(), logits.cols());
    if rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if cols != classes || hot.len() != rows * classes {
        return Err(Error::Shape {
            context: "sigmoid_cross_entropy",
            detail: format!(
                "logits {:?} vs {} classes, {} hot entries",
                logits.shape(),
                classes,
                hot.len()
            ),
        });
    }
    let denom = (rows * classes) as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(&[rows, cols]);
    for r in 0..rows {
        for c in 0..cols {
            let z = logits.at(r, c);
            let y = hot[r * classes + c] as f64;
            // stable: max(z,0) − z·y + ln(1 + e^{−|z|})
            loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            let sig = 1.0 / (1.0 + (-z).exp());
            grad.set(r, c, (sig - y) / denom);
        }
    }
    Ok((loss / denom, grad))
}

/// Dispatches on the label kind.
pub fn cross_entropy(logits: &Tensor, labels: LabelsView<'_>) -> Result<(f64, Tensor)> {
    match labels {
        LabelsView::Single(idx) => softmax_cross_entropy(logits, idx),
        LabelsView::Multi { hot, classes } => sigmoid_cross_entropy(logits, hot, classes),
    }
}
