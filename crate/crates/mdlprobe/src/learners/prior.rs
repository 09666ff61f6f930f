//! Label-marginal baseline: ignores the input entirely.

#[derive(Debug, Clone)]
pub struct PriorModel {
    probs: Vec<f64>,
}

impl PriorModel {
    /// Additively smoothed class frequencies:
    /// `(count_c + alpha) / (n + alpha * K)`.
    pub fn fit(targets: &[usize], num_classes: usize, alpha: f64) -> PriorModel {
        let mut counts = vec![0usize; num_classes];
        for &t in targets {
            counts[t] += 1;
        }
        let denom = targets.len() as f64 + alpha * num_classes as f64;
        PriorModel { probs: counts.iter().map(|&c| (c as f64 + alpha) / denom).collect() }
    }

    pub fn class_probs(&self) -> Vec<f64> {
        self.probs.clone()
    }
}
