//! Minimal dense feed-forward network engine with exact analytic gradients.
//!
//! Everything is 64-bit: the test suites lean on tight finite-difference
//! tolerances, and speed at desk scale is not a constraint.

pub mod gradcheck;
pub mod loss;
pub mod optim;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(&self, z: &Tensor) -> Tensor {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => {
                let data = z.data().iter().map(|&v| v.max(0.0)).collect();
                Tensor::from_vec(z.shape().to_vec(), data).expect("relu preserves shape")
            }
        }
    }

    /// d(activation)/dz evaluated at the cached pre-activation, multiplied
    /// element-wise into the incoming gradient.
    fn backprop(&self, pre_act: &Tensor, grad_out: &Tensor) -> Tensor {
        match self {
            Activation::Identity => grad_out.clone(),
            Activation::Relu => {
                let data = pre_act
                    .data()
                    .iter()
                    .zip(grad_out.data().iter())
                    .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
                    .collect();
                Tensor::from_vec(grad_out.shape().to_vec(), data).expect("shape preserved")
            }
        }
    }
}

/// Dense affine layer `y = activation(x · Wᵀ + b)` with row-major weights of
/// shape `[out × in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl DenseLayer {
    /// Uniform init in ±sqrt(6/(fan_in+fan_out)) from the given stream.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidArgument("layer dims must be > 0".into()));
        }
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Ok(DenseLayer {
            weights: Tensor::from_vec(vec![out_dim, in_dim], data)?,
            bias: Tensor::zeros(&[out_dim]),
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// A feed-forward stack of dense layers with optional inverted dropout
/// applied to the input of one designated layer (train mode only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub dropout_rate: f64,
    /// Index of the layer whose *input* receives dropout.
    pub dropout_layer: usize,
}

impl Mlp {
    /// Builds `dims[0] -> dims[1] -> ... -> dims.last()` with ReLU on hidden
    /// layers and the given activation on the output layer.
    pub fn feedforward(dims: &[usize], out_activation: Activation, rng: &mut ChaCha8Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "feedforward needs at least input and output dims".into(),
            ));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in 0..dims.len() - 1 {
            let act = if w + 2 == dims.len() {
                out_activation
            } else {
                Activation::Relu
            };
            layers.push(DenseLayer::init(dims[w], dims[w + 1], act, rng)?);
        }
        Ok(Mlp {
            layers,
            dropout_rate: 0.0,
            dropout_layer: 0,
        })
    }

    pub fn with_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("Mlp needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Shape {
                    context: "Mlp::with_layers",
                    detail: format!(
                        "layer dims do not chain: {} -> {}",
                        pair[0].out_dim(),
                        pair[1].in_dim()
                    ),
                });
            }
        }
        Ok(Mlp {
            layers,
            dropout_rate: 0.0,
            dropout_layer: 0,
        })
    }

    pub fn set_dropout(&mut self, rate: f64, layer: usize) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0,1)",
                rate
            )));
        }
        if layer >= self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "dropout layer {} out of range",
                layer
            )));
        }
        self.dropout_rate = rate;
        self.dropout_layer = layer;
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// Forward pass over a `[batch × in_dim]` input.
    ///
    /// Dropout draws from `rng` only when `train` is set and the rate is
    /// nonzero, so a rate of zero leaves the stream untouched and train/eval
    /// forwards are bitwise identical.
    pub fn forward(
        &self,
        input: &Tensor,
        train: bool,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Tensor, ForwardCache)> {
        if input.shape().len() != 2 || input.cols() != self.in_dim() {
            return Err(Error::Shape {
                context: "Mlp::forward",
                detail: format!(
                    "input shape {:?}, expected [batch × {}]",
                    input.shape(),
                    self.in_dim()
                ),
            });
        }
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_acts: Vec::with_capacity(self.layers.len()),
            dropout_mask: None,
        };
        let mut x = input.clone();
        let apply_dropout = train && self.dropout_rate > 0.0;
        let mut rng = rng;
        for (idx, layer) in self.layers.iter().enumerate() {
            if apply_dropout && idx == self.dropout_layer {
                let rng = rng.as_deref_mut().ok_or_else(|| {
                    Error::InvalidArgument("dropout requires an rng stream in train mode".into())
                })?;
                let keep = 1.0 - self.dropout_rate;
                let mask_data: Vec<f64> = (0..x.len())
                    .map(|_| {
                        if rng.gen::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mask = Tensor::from_vec(x.shape().to_vec(), mask_data)?;
                let dropped: Vec<f64> = x
                    .data()
                    .iter()
                    .zip(mask.data().iter())
                    .map(|(a, b)| a * b)
                    .collect();
                x = Tensor::from_vec(x.shape().to_vec(), dropped)?;
                cache.dropout_mask = Some(mask);
            }
            cache.inputs.push(x.clone());
            let mut z = x.matmul_transpose(&layer.weights)?;
            z.add_row_inplace(&layer.bias)?;
            x = layer.activation.apply(&z);
            cache.pre_acts.push(z);
        }
        Ok((x, cache))
    }

    /// Backward pass. Returns per-layer parameter gradients and the gradient
    /// with respect to the (pre-dropout) input.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Tensor) -> Result<(MlpGrads, Tensor)> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache(format!(
                "cache holds {} layers, model has {}",
                cache.inputs.len(),
                self.layers.len()
            )));
        }
        let mut grads = vec![(Tensor::zeros(&[0]), Tensor::zeros(&[0])); self.layers.len()];
        let mut grad = grad_output.clone();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let pre = &cache.pre_acts[idx];
            let x = &cache.inputs[idx];
            if pre.shape() != grad.shape() || x.cols() != layer.in_dim() {
                return Err(Error::StaleCache(format!(
                    "cache/gradient shapes do not match layer {}",
                    idx
                )));
            }
            let dz = layer.activation.backprop(pre, &grad);
            // dW = dzᵀ·x, db = column sums of dz, dx = dz·W
            let dw = dz.transpose_matmul(x)?;
            let mut db = Tensor::zeros(&[layer.out_dim()]);
            for r in 0..dz.rows() {
                for c in 0..dz.cols() {
                    db.data_mut()[c] += dz.at(r, c);
                }
            }
            grad = dz.matmul(&layer.weights)?;
            if idx == self.dropout_layer {
                if let Some(mask) = &cache.dropout_mask {
                    let data: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(mask.data().iter())
                        .map(|(g, m)| g * m)
                        .collect();
                    grad = Tensor::from_vec(grad.shape().to_vec(), data)?;
                }
            }
            grads[idx] = (dw, db);
        }
        Ok((MlpGrads { layers: grads }, grad))
    }
}

/// Activation record from a forward pass, sufficient for backward.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Per-layer inputs (after dropout where applied).
    inputs: Vec<Tensor>,
    /// Per-layer pre-activations.
    pre_acts: Vec<Tensor>,
    dropout_mask: Option<Tensor>,
}

/// Per-layer (dW, db) pairs matching an `Mlp`'s parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| {
                    (
                        Tensor::zeros(l.weights.shape()),
                        Tensor::zeros(l.bias.shape()),
                    )
                })
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGrads, scale: f64) {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(other.layers.iter()) {
            w.add_scaled(ow, scale);
            b.add_scaled(ob, scale);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            w.scale(s);
            b.scale(s);
        }
    }
}
