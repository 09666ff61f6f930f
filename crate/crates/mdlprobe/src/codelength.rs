//! Codelength arithmetic for categorical and bounded-continuous labels.
//!
//! Everything here is accounting: we never emit a bitstream, we only measure
//! how many bits an ideal entropy code would need under a given predictive
//! distribution. Continuous labels use the differential-codelength convention
//! (`-log2 pdf`); the omitted bin-width constant is shared across conditions,
//! so comparisons are unaffected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Default smoothing mass applied to every categorical prediction before it
/// is scored, so that no label ever costs infinite bits.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

/// The label space a dataset's labels live in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelSpace {
    Categorical { num_classes: usize },
    BoundedContinuous { lo: f64, hi: f64 },
}

impl LabelSpace {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LabelSpace::Categorical { num_classes } if num_classes < 2 => Err(Error::Config(
                format!("categorical label space needs at least 2 classes, got {num_classes}"),
            )),
            LabelSpace::BoundedContinuous { lo, hi } if !(hi - lo > 0.0) => Err(Error::Config(
                format!("continuous label space needs hi > lo, got [{lo}, {hi}]"),
            )),
            _ => Ok(()),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match *self {
            LabelSpace::Categorical { num_classes } => Some(num_classes),
            LabelSpace::BoundedContinuous { .. } => None,
        }
    }
}

/// A single label: a class index or a bounded real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Class(usize),
    Value(f64),
}

/// Codelength in bits. Additive: independent messages cost the sum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Bits(pub f64);

impl Bits {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::ops::Add for Bits {
    type Output = Bits;
    fn add(self, rhs: Bits) -> Bits {
        Bits(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Bits {
    fn sum<I: Iterator<Item = Bits>>(iter: I) -> Bits {
        Bits(iter.map(|b| b.0).sum())
    }
}

/// A per-example predictive distribution over the label space.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictiveDistribution {
    Categorical { probs: Vec<f64> },
    Gaussian { mean: f64, stddev: f64 },
    UniformInterval { lo: f64, hi: f64 },
}

/// Bits needed to send `y` under `dist`: `-log2 p(y)` for categorical labels,
/// `-log2 pdf(y)` for continuous ones.
pub fn codelength(dist: &PredictiveDistribution, y: &Label) -> Result<Bits> {
    match (dist, y) {
        (PredictiveDistribution::Categorical { probs }, Label::Class(c)) => {
            let p = *probs
                .get(*c)
                .ok_or_else(|| Error::InvalidLabel(format!("class {c} not in {}-class space", probs.len())))?;
            if p <= 0.0 {
                return Err(Error::ZeroProbability(format!("class {c}")));
            }
            Ok(Bits(-p.log2()))
        }
        (PredictiveDistribution::Gaussian { mean, stddev }, Label::Value(v)) => {
            let z = (v - mean) / stddev;
            let nats = 0.5 * (2.0 * std::f64::consts::PI * stddev * stddev).ln() + 0.5 * z * z;
            Ok(Bits(nats / LN_2))
        }
        (PredictiveDistribution::UniformInterval { lo, hi }, Label::Value(v)) => {
            if v < lo || v > hi {
                return Err(Error::InvalidLabel(format!("value {v} outside [{lo}, {hi}]")));
            }
            Ok(Bits((hi - lo).log2()))
        }
        _ => Err(Error::InvalidLabel(
            "label kind does not match distribution kind".into(),
        )),
    }
}

/// The uniform prior used for the first block, before any labels are seen.
pub fn uniform_prior(space: &LabelSpace) -> PredictiveDistribution {
    match *space {
        LabelSpace::Categorical { num_classes } => PredictiveDistribution::Categorical {
            probs: vec![1.0 / num_classes as f64; num_classes],
        },
        LabelSpace::BoundedContinuous { lo, hi } => PredictiveDistribution::UniformInterval { lo, hi },
    }
}

/// Mix a fraction `lambda` of the uniform distribution into categorical
/// probabilities: `p' = (1 - lambda) * p + lambda / K`. Guarantees every
/// class has probability at least `lambda / K`.
pub fn smooth(probs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Config(format!(
            "smoothing lambda must be in (0, 1), got {lambda}"
        )));
    }
    let k = probs.len() as f64;
    Ok(probs.iter().map(|p| (1.0 - lambda) * p + lambda / k).collect())
}

/// Sharpen or flatten categorical probabilities: `p' ∝ p^(1/T)`.
/// `T = 1` is the identity; larger `T` moves toward uniform. Expects
/// strictly positive probabilities (smooth first).
pub fn apply_temperature(probs: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if temperature == 1.0 {
        return Ok(probs.to_vec());
    }
    // Work in log space so tiny probabilities survive the exponent.
    let inv_t = 1.0 / temperature;
    let logs: Vec<f64> = probs.iter().map(|p| p.ln() * inv_t).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// The temperature grid searched during calibration: 1000 log-uniform points
/// over [1e-1, 1e2], with 1.0 appended so calibration can never do worse on
/// dev than the uncalibrated model.
pub fn temperature_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..1000)
        .map(|i| 10f64.powf(-1.0 + 3.0 * i as f64 / 999.0))
        .collect();
    grid.push(1.0);
    grid
}

/// The Gaussian stddev grid for regression calibration: 1000 log-uniform
/// points over [10^-2.5, 10^1.5].
pub fn stddev_grid() -> Vec<f64> {
    (0..1000)
        .map(|i| 10f64.powf(-2.5 + 4.0 * i as f64 / 999.0))
        .collect()
}
