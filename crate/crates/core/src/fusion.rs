//! Multi-head late-fusion classifier: one encoder per modality, one
//! classifier head per modality, and a fused head over the concatenated
//! features. Training blends the k+1 head losses with a weight vector; the
//! per-modality heads are training-time scaffolding and inference uses the
//! fused head only.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::gradcheck::Parameterized;
use crate::nn::loss::{cross_entropy, softmax, LabelsView};
use crate::nn::{Activation, ForwardCache, Mlp, MlpGrads};
use crate::tensor::Tensor;

/// Nonnegative per-head loss weights summing to one. The last entry always
/// belongs to the fused head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendWeights(Vec<f64>);

impl BlendWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative: {:?}",
                weights
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {}, expected 1",
                sum
            )));
        }
        Ok(BlendWeights(weights))
    }

    pub fn uniform(n: usize) -> Self {
        BlendWeights(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, idx: usize) -> Self {
        let mut w = vec![0.0; n];
        w[idx] = 1.0;
        BlendWeights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn linf_distance(&self, other: &BlendWeights) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One modality's encoder network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityEncoder {
    pub id: String,
    pub net: Mlp,
    pub out_dim: usize,
}

/// Architecture description, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub encoders: Vec<EncoderSpec>,
    /// Hidden width of the fused head (input is the feature concatenation,
    /// then two hidden layers of this width, then the prediction layer).
    pub fusion_hidden: usize,
    /// Dropout rate applied at the concatenation layer (0 disables).
    #[serde(default)]
    pub dropout: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSpec {
    pub hidden: Vec<usize>,
    pub out_dim: usize,
}

/// The k+1-head late-fusion network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiHeadNet {
    pub encoders: Vec<ModalityEncoder>,
    /// Per-modality classifier heads, logits over `class_count`.
    pub heads: Vec<Mlp>,
    /// Classifier over the feature concatenation.
    pub fusion_head: Mlp,
    pub class_count: usize,
}

/// Activation records from `forward_all_heads`, sufficient for
/// `backward_blended`.
pub struct NetCaches {
    encoder: Vec<ForwardCache>,
    head: Vec<ForwardCache>,
    fusion: ForwardCache,
    batch_rows: usize,
}

/// Full-network gradients mirroring the parameter structure.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads {
    pub encoders: Vec<MlpGrads>,
    pub heads: Vec<MlpGrads>,
    pub fusion: MlpGrads,
}

impl NetGrads {
    pub fn zeros_like(net: &MultiHeadNet) -> Self {
        NetGrads {
            encoders: net.encoders.iter().map(|e| MlpGrads::zeros_like(&e.net)).collect(),
            heads: net.heads.iter().map(MlpGrads::zeros_like).collect(),
            fusion: MlpGrads::zeros_like(&net.fusion_head),
        }
    }

    pub fn add_scaled(&mut self, other: &NetGrads, scale: f64) {
        for (a, b) in self.encoders.iter_mut().zip(other.encoders.iter()) {
            a.add_scaled(b, scale);
        }
        for (a, b) in self.heads.iter_mut().zip(other.heads.iter()) {
            a.add_scaled(b, scale);
        }
        self.fusion.add_scaled(&other.fusion, scale);
    }

    /// Flat traversal in the same order as the net's parameter traversal.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for e in &self.encoders {
            for (w, b) in &e.layers {
                out.push(w);
                out.push(b);
            }
        }
        for h in &self.heads {
            for (w, b) in &h.layers {
                out.push(w);
                out.push(b);
            }
        }
        for (w, b) in &self.fusion.layers {
            out.push(w);
            out.push(b);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &NetGrads) -> f64 {
        let a = self.tensors();
        let b = other.tensors();
        let mut worst = 0.0_f64;
        for (x, y) in a.iter().zip(b.iter()) {
            for (u, v) in x.data().iter().zip(y.data().iter()) {
                worst = worst.max((u - v).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors().iter().map(|t| t.max_abs()).fold(0.0, f64::max)
    }
}

impl MultiHeadNet {
    /// Builds the architecture: each encoder maps its input dim through its
    /// hidden stack to `out_dim` (all ReLU); each per-modality head is a
    /// linear classifier; the fused head is FC-ReLU, FC-ReLU, then linear.
    pub fn build(
        arch: &ArchSpec,
        input_dims: &[usize],
        class_count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if arch.encoders.len() != input_dims.len() {
            return Err(Error::Shape {
                context: "MultiHeadNet::build",
                detail: format!(
                    "{} encoder specs for {} modalities",
                    arch.encoders.len(),
                    input_dims.len()
                ),
            });
        }
        if arch.encoders.is_empty() {
            return Err(Error::InvalidArgument("at least one modality required".into()));
        }
        if class_count < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        let mut encoders = Vec::with_capacity(arch.encoders.len());
        for (m, (spec, &in_dim)) in arch.encoders.iter().zip(input_dims).enumerate() {
            let mut dims = vec![in_dim];
            dims.extend_from_slice(&spec.hidden);
            dims.push(spec.out_dim);
            let net = Mlp::feedforward(&dims, Activation::Relu, rng)?;
            encoders.push(ModalityEncoder {
                id: format!("m{}", m),
                net,
                out_dim: spec.out_dim,
            });
        }
        let mut heads = Vec::with_capacity(encoders.len());
        for enc in &encoders {
            heads.push(Mlp::feedforward(
                &[enc.out_dim, class_count],
                Activation::Identity,
                rng,
            )?);
        }
        let concat_dim: usize = encoders.iter().map(|e| e.out_dim).sum();
        let mut fusion_head = Mlp::feedforward(
            &[concat_dim, arch.fusion_hidden, arch.fusion_hidden, class_count],
            Activation::Identity,
            rng,
        )?;
        if arch.dropout > 0.0 {
            fusion_head.set_dropout(arch.dropout, 0)?;
        }
        Ok(MultiHeadNet {
            encoders,
            heads,
            fusion_head,
            class_count,
        })
    }

    pub fn modality_count(&self) -> usize {
        self.encoders.len()
    }

    /// k+1: one head per modality plus the fused head.
    pub fn head_count(&self) -> usize {
        self.encoders.len() + 1
    }

    pub fn head_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.encoders.iter().map(|e| e.id.clone()).collect();
        ids.push("fused".into());
        ids
    }

    pub fn feature_dims(&self) -> Vec<usize> {
        self.encoders.iter().map(|e| e.out_dim).collect()
    }

    /// Runs every head. Returns k+1 logit tensors (per-modality heads first,
    /// fused head last) and the caches needed for backward.
    pub fn forward_all_heads(
        &self,
        inputs: &[Tensor],
        train: bool,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Vec<Tensor>, NetCaches)> {
        if inputs.len() != self.encoders.len() {
            return Err(Error::Shape {
                context: "forward_all_heads",
                detail: format!(
                    "{} modality inputs for {} encoders",
                    inputs.len(),
                    self.encoders.len()
                ),
            });
        }
        let rows = inputs.first().map(|t| t.rows()).unwrap_or(0);
        for t in inputs {
            if t.rows() != rows {
                return Err(Error::Shape {
                    context: "forward_all_heads",
                    detail: "modality row counts differ".into(),
                });
            }
        }
        let mut features = Vec::with_capacity(self.encoders.len());
        let mut encoder_caches = Vec::with_capacity(self.encoders.len());
        for (enc, x) in self.encoders.iter().zip(inputs) {
            let (f, cache) = enc.net.forward(x, train, rng.as_deref_mut())?;
            features.push(f);
            encoder_caches.push(cache);
        }
        let mut logits = Vec::with_capacity(self.head_count());
        let mut head_caches = Vec::with_capacity(self.heads.len());
        for (head, f) in self.heads.iter().zip(&features) {
            let (l, cache) = head.forward(f, train, rng.as_deref_mut())?;
            logits.push(l);
            head_caches.push(cache);
        }
        let concat = Tensor::concat_cols(&features.iter().collect::<Vec<_>>())?;
        let (fused_logits, fusion_cache) = self.fusion_head.forward(&concat, train, rng)?;
        logits.push(fused_logits);
        Ok((
            logits,
            NetCaches {
                encoder: encoder_caches,
                head: head_caches,
                fusion: fusion_cache,
                batch_rows: rows,
            },
        ))
    }

    /// Backward of the blended loss: per-head logit gradients are scaled by
    /// their weights and propagated, and encoder gradients accumulate the
    /// own-head path plus the fused-head slice. Equals the weighted sum of
    /// independent per-head backward passes.
    pub fn backward_blended(
        &self,
        caches: &NetCaches,
        grad_logits: &[Tensor],
        weights: &BlendWeights,
    ) -> Result<NetGrads> {
        let k = self.encoders.len();
        if grad_logits.len() != k + 1 || weights.len() != k + 1 {
            return Err(Error::Shape {
                context: "backward_blended",
                detail: format!(
                    "{} logit grads, {} weights, expected {}",
                    grad_logits.len(),
                    weights.len(),
                    k + 1
                ),
            });
        }
        if caches.encoder.len() != k {
            return Err(Error::StaleCache("cache modality count mismatch".into()));
        }
        let w = weights.as_slice();
        let mut out = NetGrads::zeros_like(self);
        let mut feature_grads: Vec<Tensor> = self
            .encoders
            .iter()
            .map(|e| Tensor::zeros(&[caches.batch_rows, e.out_dim]))
            .collect();

        for i in 0..k {
            if w[i] == 0.0 {
                continue;
            }
            let mut g = grad_logits[i].clone();
            g.scale(w[i]);
            let (head_grads, d_feat) = self.heads[i].backward(&caches.head[i], &g)?;
            out.heads[i] = head_grads;
            feature_grads[i].add_scaled(&d_feat, 1.0);
        }

        if w[k] != 0.0 {
            let mut g = grad_logits[k].clone();
            g.scale(w[k]);
            let (fusion_grads, d_concat) = self.fusion_head.backward(&caches.fusion, &g)?;
            out.fusion = fusion_grads;
            let slices = d_concat.split_cols(&self.feature_dims())?;
            for (fg, slice) in feature_grads.iter_mut().zip(&slices) {
                fg.add_scaled(slice, 1.0);
            }
        }

        for i in 0..k {
            if feature_grads[i].max_abs() == 0.0 && w[i] == 0.0 && w[k] == 0.0 {
                continue;
            }
            let (enc_grads, _) = self.encoders[i].net.backward(&caches.encoder[i], &feature_grads[i])?;
            out.encoders[i] = enc_grads;
        }
        Ok(out)
    }

    /// Fused-head class scores (softmax) in eval mode.
    pub fn predict(&self, inputs: &[Tensor]) -> Result<Tensor> {
        let (logits, _) = self.forward_all_heads(inputs, false, None)?;
        Ok(softmax(logits.last().expect("fused head present")))
    }

    /// Fused-head raw logits in eval mode (multi-label scoring).
    pub fn predict_logits(&self, inputs: &[Tensor]) -> Result<Tensor> {
        let (logits, _) = self.forward_all_heads(inputs, false, None)?;
        Ok(logits.into_iter().last().expect("fused head present"))
    }

    /// Returns a copy whose fused head ignores every modality except `keep`:
    /// the first fusion layer's columns for all other feature slices are
    /// zeroed.
    pub fn mute_except(&self, keep: usize) -> Result<MultiHeadNet> {
        if keep >= self.encoders.len() {
            return Err(Error::InvalidArgument(format!(
                "modality {} out of {}",
                keep,
                self.encoders.len()
            )));
        }
        let mut net = self.clone();
        let dims = self.feature_dims();
        let offsets: Vec<usize> = dims
            .iter()
            .scan(0, |acc, d| {
                let start = *acc;
                *acc += d;
                Some(start)
            })
            .collect();
        let first = &mut net.fusion_head.layers[0];
        let cols = first.weights.cols();
        for (m, (&start, &width)) in offsets.iter().zip(&dims).enumerate() {
            if m == keep {
                continue;
            }
            for r in 0..first.weights.rows() {
                for c in start..start + width {
                    first.weights.data_mut()[r * cols + c] = 0.0;
                }
            }
        }
        Ok(net)
    }

    fn param_slots(&self) -> Vec<(usize, usize, usize)> {
        // (section, sub index, layer index) — section 0 encoders, 1 heads, 2 fusion
        let mut slots = Vec::new();
        for (e, enc) in self.encoders.iter().enumerate() {
            for l in 0..enc.net.layers.len() {
                slots.push((0, e, l));
            }
        }
        for (h, head) in self.heads.iter().enumerate() {
            for l in 0..head.layers.len() {
                slots.push((1, h, l));
            }
        }
        for l in 0..self.fusion_head.layers.len() {
            slots.push((2, 0, l));
        }
        slots
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        (0..self.param_count())
            .map(|i| self.param(i).shape().to_vec())
            .collect()
    }

    pub fn param_labels(&self) -> Vec<String> {
        (0..self.param_count()).map(|i| self.param_label(i)).collect()
    }

    /// Applies one optimizer step given full-network gradients. Traversal
    /// order matches `NetGrads::tensors` and the `Parameterized` impl.
    pub fn apply_step(
        &mut self,
        opt: &mut crate::nn::optim::OptimizerState,
        grads: &NetGrads,
        labels: &[String],
    ) -> Result<()> {
        let grad_tensors = grads.tensors();
        let mut params: Vec<&mut Tensor> = Vec::with_capacity(grad_tensors.len());
        for enc in &mut self.encoders {
            for l in &mut enc.net.layers {
                params.push(&mut l.weights);
                params.push(&mut l.bias);
            }
        }
        for h in &mut self.heads {
            for l in &mut h.layers {
                params.push(&mut l.weights);
                params.push(&mut l.bias);
            }
        }
        for l in &mut self.fusion_head.layers {
            params.push(&mut l.weights);
            params.push(&mut l.bias);
        }
        opt.step(&mut params, &grad_tensors, labels)
    }
}

impl Parameterized for MultiHeadNet {
    fn param_count(&self) -> usize {
        self.param_slots().len() * 2
    }

    fn param(&self, idx: usize) -> &Tensor {
        let slots = self.param_slots();
        let (section, sub, layer) = slots[idx / 2];
        let mlp = match section {
            0 => &self.encoders[sub].net,
            1 => &self.heads[sub],
            _ => &self.fusion_head,
        };
        let l = &mlp.layers[layer];
        if idx % 2 == 0 {
            &l.weights
        } else {
            &l.bias
        }
    }

    fn param_mut(&mut self, idx: usize) -> &mut Tensor {
        let slots = self.param_slots();
        let (section, sub, layer) = slots[idx / 2];
        let mlp = match section {
            0 => &mut self.encoders[sub].net,
            1 => &mut self.heads[sub],
            _ => &mut self.fusion_head,
        };
        let l = &mut mlp.layers[layer];
        if idx % 2 == 0 {
            &mut l.weights
        } else {
            &mut l.bias
        }
    }

    fn param_label(&self, idx: usize) -> String {
        let slots = self.param_slots();
        let (section, sub, layer) = slots[idx / 2];
        let part = if idx % 2 == 0 { "weights" } else { "bias" };
        match section {
            0 => format!("encoder:{}/layer:{}/{}", sub, layer, part),
            1 => format!("head:{}/layer:{}/{}", sub, layer, part),
            _ => format!("fusion/layer:{}/{}", layer, part),
        }
    }
}

/// Blended loss over k+1 logit sets: `L_blend = Σ w_i · L_i`. Returns the
/// blend, the per-head losses for logging, and the unscaled per-head logit
/// gradients (weights are applied in `backward_blended`).
pub fn blended_loss(
    logits: &[Tensor],
    labels: LabelsView<'_>,
    weights: &BlendWeights,
) -> Result<(f64, Vec<f64>, Vec<Tensor>)> {
    if logits.len() != weights.len() {
        return Err(Error::Shape {
            context: "blended_loss",
            detail: format!("{} heads, {} weights", logits.len(), weights.len()),
        });
    }
    let mut per_head = Vec::with_capacity(logits.len());
    let mut grads = Vec::with_capacity(logits.len());
    for l in logits {
        let (loss, grad) = cross_entropy(l, labels)?;
        per_head.push(loss);
        grads.push(grad);
    }
    let blend = per_head
        .iter()
        .zip(weights.as_slice())
        .map(|(l, w)| w * l)
        .sum();
    Ok((blend, per_head, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use rand::Rng;

    pub(crate) fn toy_net(seed: u64) -> MultiHeadNet {
        let arch = ArchSpec {
            encoders: vec![
                EncoderSpec { hidden: vec![6], out_dim: 4 },
                EncoderSpec { hidden: vec![5], out_dim: 3 },
            ],
            fusion_hidden: 5,
            dropout: 0.0,
        };
        let mut rng = RngSeed(seed).derive("init").stream();
        MultiHeadNet::build(&arch, &[7, 6], 3, &mut rng).unwrap()
    }

    fn toy_batch(seed: u64, rows: usize) -> (Vec<Tensor>, Vec<u32>) {
        let mut rng = RngSeed(seed).derive("batch").stream();
        let x0: Vec<f64> = (0..rows * 7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x1: Vec<f64> = (0..rows * 6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<u32> = (0..rows).map(|_| rng.gen_range(0..3)).collect();
        (
            vec![
                Tensor::from_vec(vec![rows, 7], x0).unwrap(),
                Tensor::from_vec(vec![rows, 6], x1).unwrap(),
            ],
            labels,
        )
    }

    #[test]
    fn blend_weights_validate() {
        assert!(BlendWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(BlendWeights::new(vec![0.5, 0.6]).is_err());
        assert!(BlendWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(BlendWeights::new(vec![]).is_err());
    }

    #[test]
    fn published_weight_rows_are_valid() {
        BlendWeights::new(vec![0.630, 0.014, 0.356]).unwrap();
        BlendWeights::new(vec![0.38, 0.24, 0.38]).unwrap();
    }

    #[test]
    fn per_modality_logits_depend_only_on_their_modality() {
        let net = toy_net(1);
        let (inputs, _) = toy_batch(1, 4);
        let (logits, _) = net.forward_all_heads(&inputs, false, None).unwrap();
        // zero modality 1's input: heads 0 unchanged, heads 1 and fused change
        let zeroed = vec![inputs[0].clone(), Tensor::zeros(&[4, 6])];
        let (logits_z, _) = net.forward_all_heads(&zeroed, false, None).unwrap();
        assert_eq!(logits[0], logits_z[0]);
        assert_ne!(logits[1], logits_z[1]);
        assert_ne!(logits[2], logits_z[2]);
    }

    #[test]
    fn fused_logits_match_reference_recomputation() {
        let net = toy_net(2);
        let (inputs, _) = toy_batch(2, 3);
        let (logits, _) = net.forward_all_heads(&inputs, false, None).unwrap();
        // reference: run encoders and fusion head by hand
        let (f0, _) = net.encoders[0].net.forward(&inputs[0], false, None).unwrap();
        let (f1, _) = net.encoders[1].net.forward(&inputs[1], false, None).unwrap();
        let concat = Tensor::concat_cols(&[&f0, &f1]).unwrap();
        let (reference, _) = net.fusion_head.forward(&concat, false, None).unwrap();
        assert_eq!(logits[2], reference);
    }

    #[test]
    fn blended_loss_is_exact_weighted_sum() {
        let net = toy_net(3);
        let (inputs, labels) = toy_batch(3, 5);
        let (logits, _) = net.forward_all_heads(&inputs, false, None).unwrap();
        let w = BlendWeights::new(vec![0.630, 0.014, 0.356]).unwrap();
        let (blend, per_head, _) =
            blended_loss(&logits, LabelsView::Single(&labels), &w).unwrap();
        let expected = 0.630 * per_head[0] + 0.014 * per_head[1] + 0.356 * per_head[2];
        assert_eq!(blend, expected);
    }

    #[test]
    fn one_hot_fused_recovers_naive_loss() {
        let net = toy_net(4);
        let (inputs, labels) = toy_batch(4, 5);
        let (logits, _) = net.forward_all_heads(&inputs, false, None).unwrap();
        let w = BlendWeights::one_hot(3, 2);
        let (blend, per_head, _) =
            blended_loss(&logits, LabelsView::Single(&labels), &w).unwrap();
        assert_eq!(blend, per_head[2]);
    }

    #[test]
    fn head_isolation_under_one_hot_weight() {
        let net = toy_net(5);
        let (inputs, labels) = toy_batch(5, 4);
        let (logits, caches) = net.forward_all_heads(&inputs, false, None).unwrap();
        let w = BlendWeights::one_hot(3, 0);
        let (_, _, grad_logits) = blended_loss(&logits, LabelsView::Single(&labels), &w).unwrap();
        let grads = net.backward_blended(&caches, &grad_logits, &w).unwrap();
        // encoder 1, head 1, fusion head untouched
        for (wt, bt) in &grads.encoders[1].layers {
            assert_eq!(wt.max_abs(), 0.0);
            assert_eq!(bt.max_abs(), 0.0);
        }
        for (wt, bt) in &grads.heads[1].layers {
            assert_eq!(wt.max_abs(), 0.0);
            assert_eq!(bt.max_abs(), 0.0);
        }
        for (wt, bt) in &grads.fusion.layers {
            assert_eq!(wt.max_abs(), 0.0);
            assert_eq!(bt.max_abs(), 0.0);
        }
        // encoder 0 and head 0 received gradient
        assert!(grads.encoders[0].layers[0].0.max_abs() > 0.0);
        assert!(grads.heads[0].layers[0].0.max_abs() > 0.0);
    }

    #[test]
    fn blended_backward_equals_weighted_sum_of_per_head_backwards() {
        let net = toy_net(6);
        let (inputs, labels) = toy_batch(6, 4);
        let (logits, caches) = net.forward_all_heads(&inputs, false, None).unwrap();
        let w = BlendWeights::new(vec![0.3, 0.45, 0.25]).unwrap();
        let (_, _, grad_logits) = blended_loss(&logits, LabelsView::Single(&labels), &w).unwrap();
        let blended = net.backward_blended(&caches, &grad_logits, &w).unwrap();

        let mut summed = NetGrads::zeros_like(&net);
        for i in 0..3 {
            let one_hot = BlendWeights::one_hot(3, i);
            let (_, caches_i) = net.forward_all_heads(&inputs, false, None).unwrap();
            let gi = net.backward_blended(&caches_i, &grad_logits, &one_hot).unwrap();
            summed.add_scaled(&gi, w.as_slice()[i]);
        }
        let scale = blended.max_abs().max(summed.max_abs()).max(1e-12);
        assert!(blended.max_abs_diff(&summed) / scale < 1e-10);
    }

    #[test]
    fn equal_weights_equal_mean_of_per_head_gradients() {
        let net = toy_net(7);
        let (inputs, labels) = toy_batch(7, 4);
        let (logits, caches) = net.forward_all_heads(&inputs, false, None).unwrap();
        let w = BlendWeights::uniform(3);
        let (_, _, grad_logits) = blended_loss(&logits, LabelsView::Single(&labels), &w).unwrap();
        let blended = net.backward_blended(&caches, &grad_logits, &w).unwrap();
        let mut mean = NetGrads::zeros_like(&net);
        for i in 0..3 {
            let (_, caches_i) = net.forward_all_heads(&inputs, false, None).unwrap();
            let gi = net
                .backward_blended(&caches_i, &grad_logits, &BlendWeights::one_hot(3, i))
                .unwrap();
            mean.add_scaled(&gi, 1.0 / 3.0);
        }
        let scale = blended.max_abs().max(1e-12);
        assert!(blended.max_abs_diff(&mean) / scale < 1e-10);
    }

    #[test]
    fn predict_rows_sum_to_one_and_zero_final_layer_is_uniform() {
        let mut net = toy_net(8);
        let (inputs, _) = toy_batch(8, 6);
        let scores = net.predict(&inputs).unwrap();
        for r in 0..6 {
            let s: f64 = scores.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // zero the fused prediction layer: scores must be uniform 1/C
        let last = net.fusion_head.layers.last_mut().unwrap();
        last.weights.scale(0.0);
        last.bias.scale(0.0);
        let scores = net.predict(&inputs).unwrap();
        for r in 0..6 {
            for c in 0..3 {
                assert!((scores.at(r, c) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mute_except_blocks_other_modalities() {
        let net = toy_net(9);
        let muted = net.mute_except(0).unwrap();
        let (inputs, _) = toy_batch(9, 4);
        let (logits_a, _) = muted.forward_all_heads(&inputs, false, None).unwrap();
        // perturb modality 1 arbitrarily: fused logits unchanged
        let mut perturbed = inputs.clone();
        let mut rng = RngSeed(99).stream();
        let noise: Vec<f64> = (0..4 * 6).map(|_| rng.gen_range(-5.0..5.0)).collect();
        perturbed[1] = Tensor::from_vec(vec![4, 6], noise).unwrap();
        let (logits_b, _) = muted.forward_all_heads(&perturbed, false, None).unwrap();
        assert_eq!(logits_a[2], logits_b[2]);
        // but head 1 sees the change
        assert_ne!(logits_a[1], logits_b[1]);
    }

    #[test]
    fn mute_except_on_single_modality_is_identity() {
        let arch = ArchSpec {
            encoders: vec![EncoderSpec { hidden: vec![4], out_dim: 3 }],
            fusion_hidden: 4,
            dropout: 0.0,
        };
        let mut rng = RngSeed(11).stream();
        let net = MultiHeadNet::build(&arch, &[5], 3, &mut rng).unwrap();
        let muted = net.mute_except(0).unwrap();
        let mut xrng = RngSeed(12).stream();
        let x = Tensor::from_vec(vec![3, 5], (0..15).map(|_| xrng.gen_range(-1.0..1.0)).collect()).unwrap();
        let (a, _) = net.forward_all_heads(&[x.clone()], false, None).unwrap();
        let (b, _) = muted.forward_all_heads(&[x], false, None).unwrap();
        assert_eq!(a[1], b[1]);
    }

    #[test]
    fn mute_except_invalid_index_errors() {
        let net = toy_net(13);
        assert!(net.mute_except(2).is_err());
    }
}
