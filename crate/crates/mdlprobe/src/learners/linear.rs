//! Multinomial logistic regression trained by SGD on sparse features.

use crate::features::SparseFeatures;

use super::naive_bayes::softmax;
use super::SgdModel;

/// Flat parameter layout: `weights[c * dim + f]` followed by `bias[c]`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub(crate) params: Vec<f64>,
    pub(crate) num_classes: usize,
    pub(crate) dim: usize,
}

impl LinearModel {
    pub fn new(num_classes: usize, dim: usize) -> LinearModel {
        LinearModel { params: vec![0.0; num_classes * dim + num_classes], num_classes, dim }
    }

    /// Flat parameter vector (weights then biases), mutable for gradient
    /// checking.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn logits(&self, feats: &SparseFeatures) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                let base = c * self.dim;
                let mut z = self.params[self.num_classes * self.dim + c];
                for &(idx, v) in feats {
                    z += v * self.params[base + idx as usize];
                }
                z
            })
            .collect()
    }

    pub fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        softmax(&self.logits(feats))
    }
}

impl SgdModel for LinearModel {
    /// One cross-entropy SGD step. L2 decay is applied lazily to the touched
    /// coordinates only, which is the usual sparse-update approximation.
    fn sgd_step(&mut self, feats: &SparseFeatures, target: usize, lr: f64, l2: f64) {
        let probs = self.class_probs(feats);
        for c in 0..self.num_classes {
            let d = probs[c] - if c == target { 1.0 } else { 0.0 };
            let base = c * self.dim;
            for &(idx, v) in feats {
                let w = &mut self.params[base + idx as usize];
                *w -= lr * (d * v + l2 * *w);
            }
            let b = &mut self.params[self.num_classes * self.dim + c];
            *b -= lr * d;
        }
    }

    fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        LinearModel::class_probs(self, feats)
    }
}

/// Mean cross-entropy (nats) plus `l2/2 * ||w||^2` over a batch, with its
/// full analytic gradient. Used by the gradient checks; training shares the
/// same per-example gradient formula in `sgd_step`.
pub fn logistic_loss_and_grad(
    model: &LinearModel,
    batch: &[(SparseFeatures, usize)],
    l2: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    let n = batch.len() as f64;
    for (feats, target) in batch {
        let probs = model.class_probs(feats);
        loss += -probs[*target].ln();
        for c in 0..model.num_classes {
            let d = (probs[c] - if c == *target { 1.0 } else { 0.0 }) / n;
            for &(idx, v) in feats {
                grad[c * model.dim + idx as usize] += d * v;
            }
            grad[model.num_classes * model.dim + c] += d;
        }
    }
    loss /= n;
    let weight_span = model.num_classes * model.dim;
    for (i, w) in model.params[..weight_span].iter().enumerate() {
        loss += 0.5 * l2 * w * w;
        grad[i] += l2 * w;
    }
    (loss, grad)
}
