//! Optimizers: SGD with momentum, AdaGrad, and Adam.
//!
//! State is allocated against a fixed parameter traversal (one accumulator
//! slot per parameter tensor) and mutated deterministically by `step`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    SgdMomentum { lr: f64, momentum: f64 },
    Adagrad { lr: f64, eps: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerSpec {
    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerSpec::SgdMomentum { lr, momentum }
    }

    pub fn adagrad(lr: f64) -> Self {
        OptimizerSpec::Adagrad { lr, eps: 1e-10 }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerSpec::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerSpec::SgdMomentum { lr, .. }
            | OptimizerSpec::Adagrad { lr, .. }
            | OptimizerSpec::Adam { lr, .. } => lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate() <= 0.0 {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if let OptimizerSpec::SgdMomentum { momentum, .. } = self {
            if !(0.0..1.0).contains(momentum) {
                return Err(Error::InvalidArgument(format!(
                    "momentum {} outside [0,1)",
                    momentum
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Sgd { velocity: Tensor },
    Adagrad { accum: Tensor },
    Adam { m: Tensor, v: Tensor },
}

/// Per-run optimizer state; accumulator shapes mirror parameter shapes.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    spec: OptimizerSpec,
    slots: Vec<Slot>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(spec: OptimizerSpec, shapes: &[Vec<usize>]) -> Result<Self> {
        spec.validate()?;
        let slots = shapes
            .iter()
            .map(|s| match spec {
                OptimizerSpec::SgdMomentum { .. } => Slot::Sgd {
                    velocity: Tensor::zeros(s),
                },
                OptimizerSpec::Adagrad { .. } => Slot::Adagrad {
                    accum: Tensor::zeros(s),
                },
                OptimizerSpec::Adam { .. } => Slot::Adam {
                    m: Tensor::zeros(s),
                    v: Tensor::zeros(s),
                },
            })
            .collect();
        Ok(OptimizerState {
            spec,
            slots,
            step_count: 0,
        })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    /// Applies one update. `params`, `grads`, and `labels` are parallel
    /// traversals; a non-finite gradient aborts naming the offending tensor.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[&Tensor],
        labels: &[String],
    ) -> Result<()> {
        if params.len() != self.slots.len() || grads.len() != self.slots.len() {
            return Err(Error::Shape {
                context: "OptimizerState::step",
                detail: format!(
                    "{} params, {} grads, state has {} slots",
                    params.len(),
                    grads.len(),
                    self.slots.len()
                ),
            });
        }
        for (idx, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                let name = labels.get(idx).map(String::as_str).unwrap_or("?");
                return Err(Error::Numeric(format!(
                    "non-finite gradient in parameter '{}'",
                    name
                )));
            }
        }
        self.step_count += 1;
        match self.spec {
            OptimizerSpec::SgdMomentum { lr, momentum } => {
                for ((param, grad), slot) in params.iter_mut().zip(grads).zip(&mut self.slots) {
                    let Slot::Sgd { velocity } = slot else { unreachable!() };
                    let v = velocity.data_mut();
                    let p = param.data_mut();
                    for i in 0..p.len() {
                        v[i] = momentum * v[i] + grad.data()[i];
                        p[i] -= lr * v[i];
                    }
                }
            }
            OptimizerSpec::Adagrad { lr, eps } => {
                for ((param, grad), slot) in params.iter_mut().zip(grads).zip(&mut self.slots) {
                    let Slot::Adagrad { accum } = slot else { unreachable!() };
                    let a = accum.data_mut();
                    let p = param.data_mut();
                    for i in 0..p.len() {
                        let g = grad.data()[i];
                        a[i] += g * g;
                        p[i] -= lr * g / (a[i].sqrt() + eps);
                    }
                }
            }
            OptimizerSpec::Adam { lr, beta1, beta2, eps } => {
                let t = self.step_count as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for ((param, grad), slot) in params.iter_mut().zip(grads).zip(&mut self.slots) {
                    let Slot::Adam { m, v } = slot else { unreachable!() };
                    let m = m.data_mut();
                    let v = v.data_mut();
                    let p = param.data_mut();
                    for i in 0..p.len() {
                        let g = grad.data()[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
