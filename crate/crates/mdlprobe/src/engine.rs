//! The prequential core: block-wise coding of one condition across seeds.
//!
//! For each seed the dataset is transformed, shuffled, and coded block by
//! block: block 0 under the uniform prior, every later block under the best
//! of the roster models fitted on the preceding prefix. With more than one
//! model the total is charged `(S - 1) * log2(M)` bits of ensemble overhead
//! for announcing the per-block choice. The same seeds (and hence the same
//! permutations) are used for every condition of an experiment, so condition
//! deltas are paired per seed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::codelength::{codelength, uniform_prior, LabelSpace};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit, FitReport, HParams, LearnerSpec};
use crate::rng::{mix, permutation_id, shuffled_indices};
use crate::schedule::{make_schedule, BlockSchedule, DEFAULT_FIRST_CUT, DEFAULT_NUM_BLOCKS};
use crate::transforms::{apply, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScheduleParams {
    pub num_blocks: usize,
    pub first_cut: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams { num_blocks: DEFAULT_NUM_BLOCKS, first_cut: DEFAULT_FIRST_CUT }
    }
}

/// Codelength of one block under the model chosen for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCodelength {
    pub block: usize,
    pub start: usize,
    pub end: usize,
    pub bits: f64,
    /// Name of the winning roster learner, or "uniform" for block 0.
    pub chosen_model: String,
}

/// One seed's full pass over the schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    /// Fingerprint of the example permutation; equal across conditions that
    /// share a seed and dataset size.
    pub permutation_id: u64,
    pub blocks: Vec<BlockCodelength>,
    pub ensemble_overhead_bits: f64,
    /// Sum of chosen block codelengths plus ensemble overhead.
    pub total_bits: f64,
}

/// One fit that happened during a run, for post-hoc inspection.
#[derive(Debug, Clone)]
pub struct FitRecord {
    pub seed: u64,
    pub block: usize,
    pub learner: String,
    pub report: FitReport,
}

#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub name: String,
    pub schedule: BlockSchedule,
    pub seed_runs: Vec<SeedRun>,
    /// Mean of per-seed totals (bits).
    pub mdl_mean: f64,
    /// Sample stddev of per-seed totals / sqrt(seeds); `None` with one seed.
    pub mdl_stderr: Option<f64>,
    /// Per-block codelength means across seeds: the learning-curve data.
    pub block_bits_mean: Vec<f64>,
    pub fit_records: Vec<FitRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Helpful,
    Inconclusive,
}

/// Paired comparison of two conditions run with identical seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub condition_a: String,
    pub condition_b: String,
    /// `a.mdl_mean - b.mdl_mean`; negative means `a` costs fewer bits.
    pub delta_mean: f64,
    pub delta_stderr: Option<f64>,
    pub per_seed_deltas: Vec<f64>,
    pub verdict: Verdict,
}

fn fnv1a_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in s.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn sample_stderr(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((var / n).sqrt())
}

type Winners = BTreeMap<(String, usize), HParams>;

struct SeedOutcome {
    run: SeedRun,
    records: Vec<FitRecord>,
    winners: Winners,
}

fn run_seed(
    dataset: &Dataset,
    transform: &Transform,
    roster: &[LearnerSpec],
    schedule: &BlockSchedule,
    seed: u64,
    winners: Option<&Winners>,
) -> Result<SeedOutcome> {
    let space = &dataset.space;
    let transformed: Vec<_> = dataset
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| apply(transform, ex, seed, i))
        .collect::<Result<_>>()?;
    let perm = shuffled_indices(seed, transformed.len());
    let ordered: Vec<_> = perm.iter().map(|&i| transformed[i].clone()).collect();

    let mut blocks = Vec::with_capacity(schedule.num_blocks());
    let mut records = Vec::new();
    let mut winners_out = Winners::new();

    let prior = uniform_prior(space);
    let range = schedule.block_range(0);
    let mut bits = 0.0;
    for ex in &ordered[range.clone()] {
        bits += codelength(&prior, &ex.label)?.value();
    }
    blocks.push(BlockCodelength {
        block: 0,
        start: range.start,
        end: range.end,
        bits,
        chosen_model: "uniform".into(),
    });

    for s in 1..schedule.num_blocks() {
        let range = schedule.block_range(s);
        let prefix = &ordered[..range.start];
        let block = &ordered[range.clone()];
        // Learner fits within a block are independent; collect preserves
        // roster order so results do not depend on thread scheduling.
        let fits: Vec<Result<(String, HParams, FitReport, f64)>> = roster
            .par_iter()
            .map(|spec| {
                let fit_seed = mix(&[seed, s as u64, fnv1a_str(&spec.name)]);
                let fixed = winners.map(|w| {
                    w.get(&(spec.name.clone(), s)).ok_or_else(|| {
                        Error::Internal(format!(
                            "no first-seed hyperparameters for learner '{}' block {s}",
                            spec.name
                        ))
                    })
                });
                let fixed = match fixed {
                    Some(r) => Some(r?),
                    None => None,
                };
                let (model, report) = fit(spec, prefix, space, fit_seed, fixed)?;
                let mut bits = 0.0;
                for ex in block {
                    bits += model.codelength(&ex.tokens, &ex.label)?.value();
                }
                if !bits.is_finite() {
                    return Err(Error::Internal(format!(
                        "non-finite block codelength from learner '{}' at block {s}",
                        spec.name
                    )));
                }
                Ok((spec.name.clone(), report.hparams.clone(), report, bits))
            })
            .collect();

        let mut best: Option<(String, f64)> = None;
        for item in fits {
            let (name, hparams, report, bits) = item?;
            if best.as_ref().map(|(_, b)| bits < *b).unwrap_or(true) {
                best = Some((name.clone(), bits));
            }
            winners_out.insert((name.clone(), s), hparams);
            records.push(FitRecord { seed, block: s, learner: name, report });
        }
        let (chosen_model, bits) = best.expect("roster validated non-empty");
        blocks.push(BlockCodelength { block: s, start: range.start, end: range.end, bits, chosen_model });
    }

    let s = schedule.num_blocks();
    let m = roster.len();
    let ensemble_overhead_bits =
        if m > 1 { (s as f64 - 1.0) * (m as f64).log2() } else { 0.0 };
    let total_bits = blocks.iter().map(|b| b.bits).sum::<f64>() + ensemble_overhead_bits;
    if !total_bits.is_finite() {
        return Err(Error::Internal(format!("non-finite total codelength for seed {seed}")));
    }
    Ok(SeedOutcome {
        run: SeedRun {
            seed,
            permutation_id: permutation_id(&perm),
            blocks,
            ensemble_overhead_bits,
            total_bits,
        },
        records,
        winners: winners_out,
    })
}

fn validate_run(
    dataset: &Dataset,
    transform: &Transform,
    roster: &[LearnerSpec],
    seeds: &[u64],
    space: &LabelSpace,
) -> Result<()> {
    if roster.is_empty() {
        return Err(Error::Config("learner roster is empty".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for spec in roster {
        if !names.insert(&spec.name) {
            return Err(Error::Config(format!("duplicate learner name '{}'", spec.name)));
        }
        spec.validate(space)?;
    }
    if seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let mut uniq = std::collections::BTreeSet::new();
    for &s in seeds {
        if !uniq.insert(s) {
            return Err(Error::Config(format!("duplicate seed {s}")));
        }
    }
    transform.validate()?;
    if dataset.examples.is_empty() {
        return Err(Error::Data("dataset has no examples".into()));
    }
    Ok(())
}

/// Run one condition with the default-style geometric schedule.
pub fn run_condition(
    name: &str,
    dataset: &Dataset,
    transform: &Transform,
    roster: &[LearnerSpec],
    params: &ScheduleParams,
    seeds: &[u64],
) -> Result<ConditionResult> {
    let schedule = make_schedule(dataset.examples.len(), params.num_blocks, params.first_cut)
        .map_err(|e| e.in_condition(name))?;
    run_condition_with_schedule(name, dataset, transform, roster, &schedule, seeds)
}

/// Run one condition over an explicit block schedule (it must cover the
/// dataset exactly).
pub fn run_condition_with_schedule(
    name: &str,
    dataset: &Dataset,
    transform: &Transform,
    roster: &[LearnerSpec],
    schedule: &BlockSchedule,
    seeds: &[u64],
) -> Result<ConditionResult> {
    let inner = || -> Result<ConditionResult> {
        validate_run(dataset, transform, roster, seeds, &dataset.space)?;
        if schedule.dataset_size() != dataset.examples.len() {
            return Err(Error::Config(format!(
                "schedule covers {} examples but the dataset has {}",
                schedule.dataset_size(),
                dataset.examples.len()
            )));
        }

        // Grid search happens on the first seed only; later seeds reuse its
        // winning hyperparameters per (learner, block) and so can run in
        // parallel.
        let first = run_seed(dataset, transform, roster, schedule, seeds[0], None)?;
        let winners = first.winners.clone();
        let rest: Vec<Result<SeedOutcome>> = seeds[1..]
            .par_iter()
            .map(|&seed| run_seed(dataset, transform, roster, schedule, seed, Some(&winners)))
            .collect();

        let mut seed_runs = vec![first.run];
        let mut fit_records = first.records;
        for outcome in rest {
            let outcome = outcome?;
            seed_runs.push(outcome.run);
            fit_records.extend(outcome.records);
        }

        let totals: Vec<f64> = seed_runs.iter().map(|r| r.total_bits).collect();
        let mdl_mean = totals.iter().sum::<f64>() / totals.len() as f64;
        let mdl_stderr = sample_stderr(&totals);
        let block_bits_mean: Vec<f64> = (0..schedule.num_blocks())
            .map(|s| {
                seed_runs.iter().map(|r| r.blocks[s].bits).sum::<f64>() / seed_runs.len() as f64
            })
            .collect();
        Ok(ConditionResult {
            name: name.to_string(),
            schedule: schedule.clone(),
            seed_runs,
            mdl_mean,
            mdl_stderr,
            block_bits_mean,
            fit_records,
        })
    };
    inner().map_err(|e| e.in_condition(name))
}

/// Rebuild a minimal [`ConditionResult`] from stored per-seed
/// `(seed, permutation_id, total_bits)` triples, enough to recompute paired
/// deltas from a saved report.
pub fn replay_condition(name: String, runs: Vec<(u64, u64, f64)>) -> ConditionResult {
    let seed_runs: Vec<SeedRun> = runs
        .iter()
        .map(|&(seed, permutation_id, total_bits)| SeedRun {
            seed,
            permutation_id,
            blocks: Vec::new(),
            ensemble_overhead_bits: 0.0,
            total_bits,
        })
        .collect();
    let totals: Vec<f64> = seed_runs.iter().map(|r| r.total_bits).collect();
    let mdl_mean = totals.iter().sum::<f64>() / totals.len().max(1) as f64;
    let mdl_stderr = sample_stderr(&totals);
    ConditionResult {
        name,
        schedule: BlockSchedule { cuts: vec![0], fallback: false },
        seed_runs,
        mdl_mean,
        mdl_stderr,
        block_bits_mean: Vec::new(),
        fit_records: Vec::new(),
    }
}

/// Paired delta between two conditions: `delta = a - b` per seed. Verdict is
/// `helpful` when `a` codes the labels in fewer bits than `b` by more than
/// twice the paired standard error.
pub fn compare_conditions(a: &ConditionResult, b: &ConditionResult) -> Result<DeltaReport> {
    if a.seed_runs.len() != b.seed_runs.len() {
        return Err(Error::Incomparable(format!(
            "conditions '{}' and '{}' ran different seed counts ({} vs {})",
            a.name,
            b.name,
            a.seed_runs.len(),
            b.seed_runs.len()
        )));
    }
    for (ra, rb) in a.seed_runs.iter().zip(&b.seed_runs) {
        if ra.seed != rb.seed || ra.permutation_id != rb.permutation_id {
            return Err(Error::Incomparable(format!(
                "conditions '{}' and '{}' were not run with paired permutations",
                a.name, b.name
            )));
        }
    }
    let per_seed_deltas: Vec<f64> = a
        .seed_runs
        .iter()
        .zip(&b.seed_runs)
        .map(|(ra, rb)| ra.total_bits - rb.total_bits)
        .collect();
    let delta_mean = a.mdl_mean - b.mdl_mean;
    let delta_stderr = sample_stderr(&per_seed_deltas);
    let verdict = match delta_stderr {
        Some(se) if delta_mean < 0.0 && delta_mean.abs() > 2.0 * se => Verdict::Helpful,
        _ => Verdict::Inconclusive,
    };
    Ok(DeltaReport {
        condition_a: a.name.clone(),
        condition_b: b.name.clone(),
        delta_mean,
        delta_stderr,
        per_seed_deltas,
        verdict,
    })
}

#[cfg(test)]
mod tests;
