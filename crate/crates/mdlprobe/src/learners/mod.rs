//! The pluggable learner roster.
//!
//! Each learner fits on a data prefix with an internal seeded train/dev
//! split, picks hyperparameters by dev codelength, stops iterative training
//! early when dev codelength stalls, and calibrates (softmax temperature for
//! categorical labels, Gaussian stddev for the discretized-regression
//! adapter) on dev. A fitted model is immutable and predicts a smoothed,
//! temperature-applied distribution for any token sequence.

mod linear;
mod mlp;
mod naive_bayes;
mod prior;

pub use linear::{logistic_loss_and_grad, LinearModel};
pub use mlp::{mlp_loss_and_grad, MlpModel};
pub use naive_bayes::NaiveBayesModel;
pub use prior::PriorModel;

use serde::{Deserialize, Serialize};

use crate::codelength::{
    apply_temperature, codelength, smooth, stddev_grid, temperature_grid, Bits, Label, LabelSpace,
    PredictiveDistribution, DEFAULT_SMOOTHING,
};
use crate::data::Example;
use crate::error::{Error, Result};
use crate::features::{extract, FeatureConfig, SparseFeatures};
use crate::rng::rng_from;

const SPLIT_TAG: u64 = 0x5350_4c54;
const EPOCH_TAG: u64 = 0x4550_4348;
const INIT_TAG: u64 = 0x494e_4954;

/// Early-stopping patience for iterative learners, in epochs.
pub const PATIENCE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Prior,
    NaiveBayes,
    Logistic,
    Mlp,
}

/// Per-kind hyperparameter grid. Unset fields fall back to the kind's
/// defaults when the grid is expanded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub alphas: Option<Vec<f64>>,
    pub learning_rates: Option<Vec<f64>>,
    pub l2: Option<Vec<f64>>,
    pub hidden: Option<Vec<usize>>,
    pub max_epochs: Option<usize>,
}

/// Discretized-regression adapter parameters: a continuous label in
/// `[lo, hi]` is rounded to the nearest multiple of `step` for training, and
/// predictions marginalize class probabilities back into a Gaussian mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub step: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Discretization {
    pub fn num_classes(&self) -> usize {
        ((self.hi - self.lo) / self.step).floor() as usize + 1
    }

    pub fn class_value(&self, class: usize) -> f64 {
        self.lo + self.step * class as f64
    }

    pub fn class_of(&self, value: f64) -> usize {
        (((value - self.lo) / self.step).round() as usize).min(self.num_classes() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub name: String,
    pub kind: LearnerKind,
    #[serde(default)]
    pub grid: Grid,
    /// Feature extraction override; when absent, each kind supplies its own
    /// default (see [`LearnerSpec::feature_config`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureConfig>,
    #[serde(default = "default_true")]
    pub calibrate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<Discretization>,
}

fn default_true() -> bool {
    true
}

impl LearnerSpec {
    pub fn prior() -> LearnerSpec {
        LearnerSpec {
            name: "prior".into(),
            kind: LearnerKind::Prior,
            grid: Grid::default(),
            features: None,
            calibrate: true,
            regression: None,
        }
    }

    /// Naive Bayes over binary (presence) unigram features. Presence rather
    /// than counts keeps predictions invariant under duplicated token
    /// streams.
    pub fn naive_bayes() -> LearnerSpec {
        LearnerSpec {
            name: "naive_bayes".into(),
            kind: LearnerKind::NaiveBayes,
            grid: Grid::default(),
            features: None,
            calibrate: true,
            regression: None,
        }
    }

    /// Multinomial logistic regression on hashed unigram+bigram counts.
    pub fn logistic() -> LearnerSpec {
        LearnerSpec {
            name: "logistic".into(),
            kind: LearnerKind::Logistic,
            grid: Grid::default(),
            features: None,
            calibrate: true,
            regression: None,
        }
    }

    /// One-hidden-layer network on hashed unigram counts. The smaller hash
    /// dimension keeps the dense input layer tractable.
    pub fn mlp() -> LearnerSpec {
        LearnerSpec {
            name: "mlp".into(),
            kind: LearnerKind::Mlp,
            grid: Grid::default(),
            features: None,
            calibrate: true,
            regression: None,
        }
    }

    /// The effective feature configuration: the explicit override when set,
    /// otherwise the kind's default. Prior ignores features; naive Bayes uses
    /// binary unigram presence (invariant under duplicated token streams);
    /// logistic uses unigram+bigram counts; the MLP uses unigram counts in a
    /// smaller hash space to bound its dense input layer.
    pub fn feature_config(&self) -> FeatureConfig {
        self.features.clone().unwrap_or_else(|| match self.kind {
            LearnerKind::Prior => FeatureConfig { ngram: 1, ..FeatureConfig::default() },
            LearnerKind::NaiveBayes => {
                FeatureConfig { ngram: 1, binary: true, ..FeatureConfig::default() }
            }
            LearnerKind::Logistic => FeatureConfig::default(),
            LearnerKind::Mlp => {
                FeatureConfig { hash_dim: 1 << 14, ngram: 1, ..FeatureConfig::default() }
            }
        })
    }

    /// Expand the grid into concrete hyperparameter points, in a fixed
    /// deterministic order.
    pub fn candidates(&self) -> Vec<HParams> {
        match self.kind {
            LearnerKind::Prior => self
                .grid
                .alphas
                .clone()
                .unwrap_or_else(|| vec![1.0])
                .into_iter()
                .map(|alpha| HParams::Prior { alpha })
                .collect(),
            LearnerKind::NaiveBayes => self
                .grid
                .alphas
                .clone()
                .unwrap_or_else(|| vec![0.01, 0.1, 1.0])
                .into_iter()
                .map(|alpha| HParams::NaiveBayes { alpha })
                .collect(),
            LearnerKind::Logistic => {
                let lrs = self.grid.learning_rates.clone().unwrap_or_else(|| vec![0.1, 0.5]);
                let l2s = self.grid.l2.clone().unwrap_or_else(|| vec![0.0, 1e-4]);
                lrs.iter()
                    .flat_map(|&lr| {
                        l2s.iter().map(move |&l2| HParams::Logistic { learning_rate: lr, l2 })
                    })
                    .collect()
            }
            LearnerKind::Mlp => {
                let lrs = self.grid.learning_rates.clone().unwrap_or_else(|| vec![0.1, 0.5]);
                let l2s = self.grid.l2.clone().unwrap_or_else(|| vec![0.0]);
                let hidden = self.grid.hidden.clone().unwrap_or_else(|| vec![16, 64]);
                let mut out = Vec::new();
                for &lr in &lrs {
                    for &l2 in &l2s {
                        for &h in &hidden {
                            out.push(HParams::Mlp { learning_rate: lr, l2, hidden: h });
                        }
                    }
                }
                out
            }
        }
    }

    pub fn max_epochs(&self) -> usize {
        self.grid.max_epochs.unwrap_or(match self.kind {
            LearnerKind::Logistic => 30,
            LearnerKind::Mlp => 50,
            _ => 0,
        })
    }

    pub fn validate(&self, space: &LabelSpace) -> Result<()> {
        space.validate()?;
        let candidates = self.candidates();
        if candidates.is_empty() {
            return Err(Error::Config(format!("learner '{}' has an empty grid", self.name)));
        }
        for h in &candidates {
            h.validate(&self.name)?;
        }
        let features = self.feature_config();
        if features.hash_dim < 2 {
            return Err(Error::Config(format!(
                "learner '{}': hash_dim must be at least 2",
                self.name
            )));
        }
        if !(1..=2).contains(&features.ngram) {
            return Err(Error::Config(format!(
                "learner '{}': ngram order must be 1 or 2",
                self.name
            )));
        }
        match (space, &self.regression) {
            (LabelSpace::BoundedContinuous { .. }, None) => Err(Error::Config(format!(
                "learner '{}' cannot code continuous labels; wrap it in the discretized-regression adapter",
                self.name
            ))),
            (LabelSpace::Categorical { .. }, Some(_)) => Err(Error::Config(format!(
                "learner '{}' has a regression adapter but the label space is categorical",
                self.name
            ))),
            (LabelSpace::BoundedContinuous { lo, hi }, Some(d)) => {
                if (d.lo, d.hi) != (*lo, *hi) {
                    return Err(Error::Config(format!(
                        "learner '{}': adapter range [{}, {}] does not match label space [{lo}, {hi}]",
                        self.name, d.lo, d.hi
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Wrap a categorical learner so it codes bounded-continuous labels through
/// `floor((hi-lo)/step)+1` classes, predicting a Gaussian whose mean is the
/// probability-weighted average class value and whose stddev is tuned on dev.
pub fn discretize_regression_adapter(
    inner: LearnerSpec,
    step: f64,
    lo: f64,
    hi: f64,
) -> Result<LearnerSpec> {
    if !(step > 0.0) || step > hi - lo {
        return Err(Error::Config(format!(
            "regression step must be in (0, {}], got {step}",
            hi - lo
        )));
    }
    if inner.regression.is_some() {
        return Err(Error::Config("learner already has a regression adapter".into()));
    }
    Ok(LearnerSpec { regression: Some(Discretization { step, lo, hi }), ..inner })
}

/// One concrete hyperparameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HParams {
    Prior { alpha: f64 },
    NaiveBayes { alpha: f64 },
    Logistic { learning_rate: f64, l2: f64 },
    Mlp { learning_rate: f64, l2: f64, hidden: usize },
}

impl HParams {
    fn validate(&self, learner: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("learner '{learner}': {msg}")));
        match *self {
            HParams::Prior { alpha } | HParams::NaiveBayes { alpha } if !(alpha > 0.0) => {
                bad(format!("smoothing alpha must be positive, got {alpha}"))
            }
            HParams::Logistic { learning_rate, l2 } | HParams::Mlp { learning_rate, l2, .. }
                if !(learning_rate > 0.0) || l2 < 0.0 =>
            {
                bad(format!("need learning_rate > 0 and l2 >= 0, got {learning_rate}, {l2}"))
            }
            HParams::Mlp { hidden: 0, .. } => bad("hidden width must be positive".into()),
            _ => Ok(()),
        }
    }
}

/// Report on one fit: what was chosen and how well it did on dev.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub hparams: HParams,
    /// Dev codelength per example after calibration (bits). Falls back to
    /// the training prefix when no dev split was needed.
    pub dev_bits_per_example: f64,
    /// Dev codelength per example at temperature 1, before calibration.
    pub dev_bits_per_example_uncalibrated: f64,
    pub epochs: usize,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
enum Fitted {
    Prior(PriorModel),
    NaiveBayes(NaiveBayesModel),
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Fitted {
    fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64> {
        match self {
            Fitted::Prior(m) => m.class_probs(),
            Fitted::NaiveBayes(m) => m.class_probs(feats),
            Fitted::Linear(m) => m.class_probs(feats),
            Fitted::Mlp(m) => m.class_probs(feats),
        }
    }
}

/// A fitted learner: immutable, deterministic, shareable across threads.
#[derive(Debug, Clone)]
pub struct PredictiveModel {
    inner: Fitted,
    features: FeatureConfig,
    smoothing: f64,
    temperature: f64,
    regression: Option<(Discretization, f64)>,
}

impl PredictiveModel {
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn stddev(&self) -> Option<f64> {
        self.regression.as_ref().map(|(_, s)| *s)
    }

    /// Smoothed (and for categorical labels, temperature-scaled) predictive
    /// distribution for a token sequence.
    pub fn predict(&self, tokens: &[String]) -> PredictiveDistribution {
        let feats = extract(tokens, &self.features);
        let raw = self.inner.class_probs(&feats);
        let smoothed = smooth(&raw, self.smoothing).expect("smoothing lambda fixed in (0,1)");
        match &self.regression {
            None => PredictiveDistribution::Categorical {
                probs: apply_temperature(&smoothed, self.temperature)
                    .expect("temperature fixed positive"),
            },
            Some((disc, stddev)) => {
                let mean: f64 = smoothed
                    .iter()
                    .enumerate()
                    .map(|(c, p)| p * disc.class_value(c))
                    .sum();
                PredictiveDistribution::Gaussian { mean, stddev: *stddev }
            }
        }
    }

    /// Bits to code `label` under this model's prediction for `tokens`.
    pub fn codelength(&self, tokens: &[String], label: &Label) -> Result<Bits> {
        codelength(&self.predict(tokens), label)
    }
}

fn class_target(label: &Label, space: &LabelSpace, disc: Option<&Discretization>) -> Result<usize> {
    match (label, space, disc) {
        (Label::Class(c), LabelSpace::Categorical { num_classes }, None) => {
            if *c >= *num_classes {
                return Err(Error::InvalidLabel(format!(
                    "class {c} outside {num_classes}-class space"
                )));
            }
            Ok(*c)
        }
        (Label::Value(v), LabelSpace::BoundedContinuous { lo, hi }, Some(d)) => {
            if *v < *lo || *v > *hi {
                return Err(Error::InvalidLabel(format!("value {v} outside [{lo}, {hi}]")));
            }
            Ok(d.class_of(*v))
        }
        _ => Err(Error::Internal("label kind does not match learner configuration".into())),
    }
}

/// The seeded 90/10 train/dev split over prefix indices. Stratified by class
/// when every class has at least 10 examples.
fn train_dev_split(targets: &[usize], num_classes: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = targets.len();
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng_from(&[seed, SPLIT_TAG]));

    let mut counts = vec![0usize; num_classes];
    for &t in targets {
        counts[t] += 1;
    }
    let stratify = counts.iter().all(|&c| c >= 10);

    let mut dev: Vec<usize> = Vec::new();
    if stratify {
        let mut taken = vec![0usize; num_classes];
        let want: Vec<usize> = counts.iter().map(|&c| (c / 10).max(1)).collect();
        for &i in &order {
            let t = targets[i];
            if taken[t] < want[t] {
                taken[t] += 1;
                dev.push(i);
            }
        }
    } else {
        dev.extend(order.iter().take((n / 10).max(1)).copied());
    }
    let in_dev: std::collections::HashSet<usize> = dev.iter().copied().collect();
    let train: Vec<usize> = order.iter().copied().filter(|i| !in_dev.contains(i)).collect();
    (train, dev)
}

/// Pick the temperature minimizing total dev bits over smoothed probability
/// rows. Returns `(temperature, bits, bits_at_unit_temperature)`.
fn select_temperature(rows: &[Vec<f64>], targets: &[usize]) -> (f64, f64, f64) {
    let bits_at = |t: f64| -> f64 {
        rows.iter()
            .zip(targets)
            .map(|(row, &y)| {
                let scaled = apply_temperature(row, t).expect("grid temperatures positive");
                -scaled[y].log2()
            })
            .sum()
    };
    let unit = bits_at(1.0);
    let mut best = (1.0, unit);
    for t in temperature_grid() {
        let b = bits_at(t);
        if b < best.1 {
            best = (t, b);
        }
    }
    (best.0, best.1, unit)
}

/// Pick the Gaussian stddev minimizing total dev bits for the given
/// prediction means and true values. Returns `(stddev, bits)`.
fn select_stddev(means: &[f64], targets: &[f64]) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for s in stddev_grid() {
        let bits: f64 = means
            .iter()
            .zip(targets)
            .map(|(&m, &y)| {
                codelength(&PredictiveDistribution::Gaussian { mean: m, stddev: s }, &Label::Value(y))
                    .expect("gaussian codelength always defined")
                    .value()
            })
            .sum();
        if bits < best.1 {
            best = (s, bits);
        }
    }
    best
}

struct TrainSet {
    feats: Vec<SparseFeatures>,
    targets: Vec<usize>,
}

fn train_inner(
    spec: &LearnerSpec,
    hash_dim: usize,
    hparams: &HParams,
    train: &TrainSet,
    dev: &TrainSet,
    num_classes: usize,
    seed: u64,
) -> Result<(Fitted, usize)> {
    match hparams {
        HParams::Prior { alpha } => {
            Ok((Fitted::Prior(PriorModel::fit(&train.targets, num_classes, *alpha)), 0))
        }
        HParams::NaiveBayes { alpha } => Ok((
            Fitted::NaiveBayes(NaiveBayesModel::fit(
                &train.feats,
                &train.targets,
                num_classes,
                *alpha,
                hash_dim,
            )),
            0,
        )),
        HParams::Logistic { learning_rate, l2 } => {
            let (model, epochs) = train_iterative(
                LinearModel::new(num_classes, hash_dim),
                spec,
                train,
                dev,
                *learning_rate,
                *l2,
                seed,
            )?;
            Ok((Fitted::Linear(model), epochs))
        }
        HParams::Mlp { learning_rate, l2, hidden } => {
            let init_rng = &mut rng_from(&[seed, INIT_TAG]);
            let (model, epochs) = train_iterative(
                MlpModel::new(num_classes, hash_dim, *hidden, init_rng),
                spec,
                train,
                dev,
                *learning_rate,
                *l2,
                seed,
            )?;
            Ok((Fitted::Mlp(model), epochs))
        }
    }
}

/// Minimal interface the iterative trainers need: one SGD step and a
/// probability readout.
pub trait SgdModel: Clone {
    fn sgd_step(&mut self, feats: &SparseFeatures, target: usize, lr: f64, l2: f64);
    fn class_probs(&self, feats: &SparseFeatures) -> Vec<f64>;
}

/// Epoch loop with dev-based early stopping: stop as soon as dev codelength
/// fails to improve for `PATIENCE` epochs, keeping the best snapshot.
fn train_iterative<M: SgdModel>(
    mut model: M,
    spec: &LearnerSpec,
    train: &TrainSet,
    dev: &TrainSet,
    lr: f64,
    l2: f64,
    seed: u64,
) -> Result<(M, usize)> {
    use rand::seq::SliceRandom;
    let dev_bits = |m: &M| -> f64 {
        dev.feats
            .iter()
            .zip(&dev.targets)
            .map(|(f, &y)| {
                let probs = smooth(&m.class_probs(f), DEFAULT_SMOOTHING).unwrap();
                -probs[y].log2()
            })
            .sum()
    };

    let mut best = model.clone();
    let mut best_bits = dev_bits(&model);
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train.feats.len()).collect();
    for epoch in 1..=spec.max_epochs() {
        order.shuffle(&mut rng_from(&[seed, EPOCH_TAG, epoch as u64]));
        for &i in &order {
            model.sgd_step(&train.feats[i], train.targets[i], lr, l2);
        }
        let bits = dev_bits(&model);
        if bits < best_bits {
            best_bits = bits;
            best = model.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= PATIENCE {
                break;
            }
        }
    }
    Ok((best, best_epoch))
}

/// Fit a learner on a data prefix. Deterministic given
/// `(spec, prefix order, seed)`. When `fixed` is given, grid search is
/// skipped and that point is trained directly; it must be a point of the
/// spec's grid.
pub fn fit(
    spec: &LearnerSpec,
    prefix: &[Example],
    space: &LabelSpace,
    seed: u64,
    fixed: Option<&HParams>,
) -> Result<(PredictiveModel, FitReport)> {
    let started = std::time::Instant::now();
    if prefix.is_empty() {
        return Err(Error::Config("cannot fit on an empty prefix".into()));
    }
    spec.validate(space)?;
    let candidates = match fixed {
        Some(h) => {
            if !spec.candidates().contains(h) {
                return Err(Error::Config(format!(
                    "fixed hyperparameters {h:?} are not a point of learner '{}' grid",
                    spec.name
                )));
            }
            vec![h.clone()]
        }
        None => spec.candidates(),
    };

    let features = spec.feature_config();
    let disc = spec.regression.as_ref();
    let num_classes = disc
        .map(Discretization::num_classes)
        .or_else(|| space.num_classes())
        .expect("validated above");
    let targets: Vec<usize> = prefix
        .iter()
        .map(|ex| class_target(&ex.label, space, disc))
        .collect::<Result<_>>()?;
    let feats: Vec<SparseFeatures> =
        prefix.iter().map(|ex| extract(&ex.tokens, &features)).collect();

    let iterative = matches!(spec.kind, LearnerKind::Logistic | LearnerKind::Mlp);
    let needs_dev = spec.calibrate || candidates.len() > 1 || iterative || disc.is_some();
    if needs_dev && prefix.len() < 10 {
        return Err(Error::TooSmallPrefix(prefix.len()));
    }

    let (train_idx, dev_idx) = if needs_dev {
        train_dev_split(&targets, num_classes, seed)
    } else {
        ((0..prefix.len()).collect(), Vec::new())
    };
    let gather = |idx: &[usize]| TrainSet {
        feats: idx.iter().map(|&i| feats[i].clone()).collect(),
        targets: idx.iter().map(|&i| targets[i]).collect(),
    };
    let train = gather(&train_idx);
    let dev = gather(&dev_idx);
    let dev_values: Vec<f64> = dev_idx
        .iter()
        .map(|&i| match prefix[i].label {
            Label::Value(v) => v,
            Label::Class(c) => c as f64,
        })
        .collect();

    struct Candidate {
        fitted: Fitted,
        hparams: HParams,
        epochs: usize,
        temperature: f64,
        stddev: Option<f64>,
        dev_bits: f64,
        dev_bits_unit: f64,
    }

    let mut best: Option<Candidate> = None;
    for hparams in candidates {
        let (fitted, epochs) = train_inner(spec, features.hash_dim, &hparams, &train, &dev, num_classes, seed)?;
        let (temperature, stddev, dev_bits, dev_bits_unit) = if dev.feats.is_empty() {
            // No dev split needed: report training-prefix codelength instead.
            let bits: f64 = train
                .feats
                .iter()
                .zip(&train.targets)
                .map(|(f, &y)| {
                    let probs = smooth(&fitted.class_probs(f), DEFAULT_SMOOTHING).unwrap();
                    -probs[y].log2()
                })
                .sum();
            (1.0, None, bits, bits)
        } else {
            let rows: Vec<Vec<f64>> = dev
                .feats
                .iter()
                .map(|f| smooth(&fitted.class_probs(f), DEFAULT_SMOOTHING).unwrap())
                .collect();
            match disc {
                None => {
                    let (t, bits, unit) = if spec.calibrate {
                        select_temperature(&rows, &dev.targets)
                    } else {
                        let unit: f64 = rows
                            .iter()
                            .zip(&dev.targets)
                            .map(|(row, &y)| -row[y].log2())
                            .sum();
                        (1.0, unit, unit)
                    };
                    (t, None, bits, unit)
                }
                Some(d) => {
                    let means: Vec<f64> = rows
                        .iter()
                        .map(|row| {
                            row.iter().enumerate().map(|(c, p)| p * d.class_value(c)).sum()
                        })
                        .collect();
                    let (s, bits) = select_stddev(&means, &dev_values);
                    (1.0, Some(s), bits, bits)
                }
            }
        };
        if !dev_bits.is_finite() {
            return Err(Error::Internal(format!(
                "non-finite dev codelength for learner '{}'",
                spec.name
            )));
        }
        let candidate = Candidate {
            fitted,
            hparams,
            epochs,
            temperature,
            stddev,
            dev_bits,
            dev_bits_unit,
        };
        let better = best.as_ref().map(|b| candidate.dev_bits < b.dev_bits).unwrap_or(true);
        if better {
            best = Some(candidate);
        }
    }
    let best = best.expect("grid validated non-empty");

    let denom = if dev.feats.is_empty() { train.feats.len() as f64 } else { dev.feats.len() as f64 };
    let model = PredictiveModel {
        inner: best.fitted,
        features,
        smoothing: DEFAULT_SMOOTHING,
        temperature: best.temperature,
        regression: disc.map(|d| (d.clone(), best.stddev.expect("stddev tuned for regression"))),
    };
    let report = FitReport {
        hparams: best.hparams,
        dev_bits_per_example: best.dev_bits / denom,
        dev_bits_per_example_uncalibrated: best.dev_bits_unit / denom,
        epochs: best.epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}
