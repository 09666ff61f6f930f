//! One-hidden-layer tanh network on sparse features.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::features::SparseFeatures;

use super::naive_bayes::softmax;
use super::SgdModel;

/// Flat parameter layout: `w1[h * dim]`, then `b1[h]`, then `w2[k * h]`,
/// then `b2[k]`, where `w1[j * dim + f]` and `w2[c * hidden + j]`.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub(crate) params: Vec<f64>,
    pub(crate) num_classes: usize,
    pub(crate) dim: usize,
    pub(crate) hidden: usize,
}

impl MlpModel {
    pub fn new(num_classes: usize, dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> MlpModel {
        assert!(hidden > 0, "hidden width validated upstream");
        let mut params = vec![0.0; hidden * dim + hidden + num_classes * hidden + num_classes];
        let r1 = (6.0 / (dim + hidden) as f64).sqrt();
        for w in params[..hidden * dim].iter_mut() {
            *w = rng.random_range(-r1..r1);
        }
        let r2 = (6.0 / (hidden + num_classes) as f64).sqrt();
        let w2_start = hidden * dim + hidden;
        for w in params[w2_start..w2_start + num_classes * hidden].iter_mut() {
            *w = rng.random_range(-r2..r2);
        }
        MlpModel { params, num_classes, dim, hidden }
    }

    /// Flat parameter vector (`w1`, `b1`, `w2`, `b2`), mutable for gradient
    /// checking.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.dim;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.num_classes * self.hidden;
        (b1, w2, b2)
    }

    fn forward(&self, feats: &SparseFeatures) -> (Vec<f64>, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let mut a = self.params[b1 + j];
                let base = j * self.dim;
                for &(idx, v) in feats {
                    a += v * self.params[base + idx as usize];
                }
                a
            })
            .collect();
        for a in &mut h {
            *a = a.tanh();
        }
        let logits: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let mut z = self.params[b2 + c];
                let base = w2 + c * self.hidden;
                for (j, &hj) in h.iter().enumerate() {
                    z += self.params[base + j] * hj;
                }
                z
            })
            .collect();
        (h, logits)
    }

    pub fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        softmax(&self.forward(feats).1)
    }
}

impl SgdModel for MlpModel {
    fn sgd_step(&mut self, feats: &SparseFeatures, target: usize, lr: f64, l2: f64) {
        let (b1, w2, b2) = self.offsets();
        let (h, logits) = self.forward(feats);
        let probs = softmax(&logits);

        let d_logits: Vec<f64> =
            (0..self.num_classes).map(|c| probs[c] - if c == target { 1.0 } else { 0.0 }).collect();
        let mut d_h = vec![0.0; self.hidden];
        for c in 0..self.num_classes {
            let base = w2 + c * self.hidden;
            for j in 0..self.hidden {
                d_h[j] += d_logits[c] * self.params[base + j];
            }
            for j in 0..self.hidden {
                let w = &mut self.params[base + j];
                *w -= lr * (d_logits[c] * h[j] + l2 * *w);
            }
            self.params[b2 + c] -= lr * d_logits[c];
        }
        for j in 0..self.hidden {
            let d_a = d_h[j] * (1.0 - h[j] * h[j]);
            let base = j * self.dim;
            for &(idx, v) in feats {
                let w = &mut self.params[base + idx as usize];
                *w -= lr * (d_a * v + l2 * *w);
            }
            self.params[b1 + j] -= lr * d_a;
        }
    }

    fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        MlpModel::class_probs(self, feats)
    }
}

/// Mean cross-entropy (nats) plus `l2/2 * ||W||^2` over a batch, with its
/// full analytic gradient. Mirrors the formulas used by `sgd_step`.
pub fn mlp_loss_and_grad(
    model: &MlpModel,
    batch: &[(SparseFeatures, usize)],
    l2: f64,
) -> (f64, Vec<f64>) {
    let (b1, w2, b2) = model.offsets();
    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    let n = batch.len() as f64;
    for (feats, target) in batch {
        let (h, logits) = model.forward(feats);
        let probs = softmax(&logits);
        loss += -probs[*target].ln();
        let mut d_h = vec![0.0; model.hidden];
        for c in 0..model.num_classes {
            let d = (probs[c] - if c == *target { 1.0 } else { 0.0 }) / n;
            let base = w2 + c * model.hidden;
            for j in 0..model.hidden {
                d_h[j] += d * model.params[base + j];
                grad[base + j] += d * h[j];
            }
            grad[b2 + c] += d;
        }
        for j in 0..model.hidden {
            let d_a = d_h[j] * (1.0 - h[j] * h[j]);
            let base = j * model.dim;
            for &(idx, v) in feats {
                grad[base + idx as usize] += d_a * v;
            }
            grad[b1 + j] += d_a;
        }
    }
    loss /= n;
    // L2 on the two weight matrices, not the biases.
    for i in (0..b1).chain(w2..b2) {
        let w = model.params[i];
        loss += 0.5 * l2 * w * w;
        grad[i] += l2 * w;
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn deterministic_init() {
        let a = MlpModel::new(3, 16, 4, &mut rng_from(&[7]));
        let b = MlpModel::new(3, 16, 4, &mut rng_from(&[7]));
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn probs_sum_to_one() {
        let m = MlpModel::new(4, 16, 8, &mut rng_from(&[1]));
        let p = m.class_probs(&vec![(2, 1.0), (5, 3.0)]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
