//! Central finite-difference gradient oracle.
//!
//! This is the independent reference against which every analytic backward
//! pass is checked; it never calls into the backward code itself.

use crate::tensor::Tensor;

/// Anything exposing a flat, ordered traversal of its parameter tensors.
pub trait Parameterized {
    fn param_count(&self) -> usize;
    fn param(&self, idx: usize) -> &Tensor;
    fn param_mut(&mut self, idx: usize) -> &mut Tensor;
    fn param_label(&self, idx: usize) -> String;
}

/// Central difference of a scalar function at a point.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64, step: f64) -> f64 {
    assert!(step > 0.0, "step must be positive");
    (f(x + step) - f(x - step)) / (2.0 * step)
}

/// Central finite differences of `loss` with respect to every parameter of
/// `model`, one tensor of derivatives per parameter tensor. The model is
/// restored to its original state afterwards.
pub fn finite_diff_grad<M: Parameterized>(
    model: &mut M,
    mut loss: impl FnMut(&M) -> f64,
    step: f64,
) -> Vec<Tensor> {
    assert!(step > 0.0, "step must be positive");
    let count = model.param_count();
    let mut grads = Vec::with_capacity(count);
    for p in 0..count {
        let len = model.param(p).len();
        let shape = model.param(p).shape().to_vec();
        let mut g = Tensor::zeros(&shape);
        for i in 0..len {
            let orig = model.param(p).data()[i];
            model.param_mut(p).data_mut()[i] = orig + step;
            let fp = loss(model);
            model.param_mut(p).data_mut()[i] = orig - step;
            let fm = loss(model);
            model.param_mut(p).data_mut()[i] = orig;
            g.data_mut()[i] = (fp - fm) / (2.0 * step);
        }
        grads.push(g);
    }
    grads
}

/// Worst relative error between analytic and numeric gradients. Entries where
/// both are below `1e-8` in magnitude are treated as agreeing.
pub fn max_rel_error(analytic: &[&Tensor], numeric: &[Tensor]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst = 0.0_f64;
    for (a, n) in analytic.iter().zip(numeric.iter()) {
        assert_eq!(a.shape(), n.shape());
        for (&x, &y) in a.data().iter().zip(n.data().iter()) {
            let scale = x.abs().max(y.abs());
            if scale < 1e-8 {
                continue;
            }
            worst = worst.max((x - y).abs() / scale);
        }
    }
    worst
}
