//! Multinomial naive Bayes over hashed features.
//!
//! With binary (presence) features this reduces to a set-membership model:
//! repeated tokens carry no extra weight, so predictions are exactly
//! invariant under duplicated token streams.

use std::collections::HashMap;

use crate::features::SparseFeatures;

#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    class_log_prior: Vec<f64>,
    /// log p(feature | class) for features seen in training.
    feature_log_prob: Vec<HashMap<u32, f64>>,
    /// log p for a feature never seen with that class.
    unseen_log_prob: Vec<f64>,
}

impl NaiveBayesModel {
    pub fn fit(
        feats: &[SparseFeatures],
        targets: &[usize],
        num_classes: usize,
        alpha: f64,
        hash_dim: usize,
    ) -> NaiveBayesModel {
        let mut class_counts = vec![0f64; num_classes];
        let mut feature_counts: Vec<HashMap<u32, f64>> = vec![HashMap::new(); num_classes];
        let mut totals = vec![0f64; num_classes];
        for (f, &y) in feats.iter().zip(targets) {
            class_counts[y] += 1.0;
            for &(idx, v) in f {
                *feature_counts[y].entry(idx).or_insert(0.0) += v;
                totals[y] += v;
            }
        }
        let n = targets.len() as f64;
        let class_log_prior = class_counts
            .iter()
            .map(|&c| ((c + alpha) / (n + alpha * num_classes as f64)).ln())
            .collect();
        let mut feature_log_prob = Vec::with_capacity(num_classes);
        let mut unseen_log_prob = Vec::with_capacity(num_classes);
        for y in 0..num_classes {
            let denom = totals[y] + alpha * hash_dim as f64;
            unseen_log_prob.push((alpha / denom).ln());
            feature_log_prob.push(
                feature_counts[y]
                    .iter()
                    .map(|(&idx, &c)| (idx, ((c + alpha) / denom).ln()))
                    .collect(),
            );
        }
        NaiveBayesModel { class_log_prior, feature_log_prob, unseen_log_prob }
    }

    pub fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.class_log_prior.len())
            .map(|y| {
                let mut s = self.class_log_prior[y];
                for &(idx, v) in feats {
                    let lp = self.feature_log_prob[y]
                        .get(&idx)
                        .copied()
                        .unwrap_or(self.unseen_log_prob[y]);
                    s += v * lp;
                }
                s
            })
            .collect();
        softmax(&scores)
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}
