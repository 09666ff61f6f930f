//! Experiment orchestration: config in, report plus CSV learning curves out.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::{DatasetSource, ExperimentConfig, GeneratorSpec};
use crate::data::{load_jsonl, Dataset, LoadOptions};
use crate::engine::{
    compare_conditions, run_condition, ConditionResult, DeltaReport, SeedRun,
};
use crate::error::{Error, Result};
use crate::generators::{
    gen_count_comparison, gen_fraction_regression, gen_order_task, gen_wordlist_bias_task,
};
use crate::transforms::Transform;

/// Structured warning entries, serialized into the report rather than logged.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The dataset was too small for the requested schedule; a two-block
    /// fallback was used instead.
    ScheduleFallback { requested_blocks: usize, actual_blocks: usize },
    /// Standard errors cannot be estimated from a single seed.
    SingleSeedStderr,
    /// Two mask-by-wordlist conditions share words, so their deltas are not
    /// independent probes.
    WordlistOverlap { condition_a: String, condition_b: String, shared: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub transform: Transform,
    pub mdl_mean: f64,
    pub mdl_stderr: Option<f64>,
    pub block_bits_mean: Vec<f64>,
    pub seed_runs: Vec<SeedRun>,
}

/// The full experiment artifact: everything needed to recompute or extend
/// the analysis without rerunning.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub dataset_name: String,
    pub dataset_size: usize,
    pub dataset_checksum: Option<String>,
    pub schedule_cuts: Vec<usize>,
    pub label_names: Option<Vec<String>>,
    pub conditions: Vec<ConditionReport>,
    /// Each non-baseline condition compared against the baseline, in config
    /// order.
    pub deltas: Vec<DeltaReport>,
    pub warnings: Vec<Warning>,
}

pub fn materialize_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    match &config.dataset {
        DatasetSource::Path { path } => {
            load_jsonl(path, &LoadOptions { cap: config.cap, cap_seed: 0 })
        }
        DatasetSource::Generator { generator } => match generator {
            GeneratorSpec::CountComparison { n, vocab, max_count, seed } => {
                gen_count_comparison(*n, *vocab, *max_count, *seed)
            }
            GeneratorSpec::OrderTask { n, seed } => gen_order_task(*n, *seed),
            GeneratorSpec::WordlistBias { n, list_a, list_b, seed } => {
                gen_wordlist_bias_task(*n, list_a, list_b, *seed)
            }
            GeneratorSpec::FractionRegression { n, seed } => gen_fraction_regression(*n, *seed),
        },
    }
}

fn wordlist_overlap_warnings(config: &ExperimentConfig) -> Vec<Warning> {
    let lists: Vec<(&str, &std::collections::BTreeSet<String>)> = config
        .conditions
        .iter()
        .filter_map(|c| match &c.transform {
            Transform::MaskByWordlist { words } => Some((c.name.as_str(), words)),
            _ => None,
        })
        .collect();
    let mut warnings = Vec::new();
    for (i, (name_a, words_a)) in lists.iter().enumerate() {
        for (name_b, words_b) in &lists[i + 1..] {
            let shared: Vec<String> = words_a.intersection(words_b).cloned().collect();
            if !shared.is_empty() {
                warnings.push(Warning::WordlistOverlap {
                    condition_a: name_a.to_string(),
                    condition_b: name_b.to_string(),
                    shared,
                });
            }
        }
    }
    warnings
}

/// Run every condition of the experiment with shared seeds and schedule and
/// assemble the report. No files are touched; see [`write_outputs`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let dataset = materialize_dataset(config)?;

    let mut warnings = wordlist_overlap_warnings(config);
    if config.seeds.len() == 1 {
        warnings.push(Warning::SingleSeedStderr);
    }

    let mut results: Vec<ConditionResult> = Vec::with_capacity(config.conditions.len());
    for condition in &config.conditions {
        results.push(run_condition(
            &condition.name,
            &dataset,
            &condition.transform,
            &config.learners,
            &config.schedule,
            &config.seeds,
        )?);
    }

    let schedule = &results[0].schedule;
    if schedule.fallback {
        warnings.insert(
            0,
            Warning::ScheduleFallback {
                requested_blocks: config.schedule.num_blocks,
                actual_blocks: schedule.num_blocks(),
            },
        );
    }

    let baseline = results
        .iter()
        .find(|r| r.name == config.baseline)
        .expect("baseline validated present");
    let deltas: Vec<DeltaReport> = results
        .iter()
        .filter(|r| r.name != config.baseline)
        .map(|r| compare_conditions(r, baseline))
        .collect::<Result<_>>()?;

    let conditions: Vec<ConditionReport> = results
        .iter()
        .zip(&config.conditions)
        .map(|(r, c)| ConditionReport {
            name: r.name.clone(),
            transform: c.transform.clone(),
            mdl_mean: r.mdl_mean,
            mdl_stderr: r.mdl_stderr,
            block_bits_mean: r.block_bits_mean.clone(),
            seed_runs: r.seed_runs.clone(),
        })
        .collect();

    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset_name: dataset.name.clone(),
        dataset_size: dataset.examples.len(),
        dataset_checksum: dataset.checksum.clone(),
        schedule_cuts: schedule.cuts.clone(),
        label_names: dataset.label_names.clone(),
        conditions,
        deltas,
        warnings,
    })
}

/// Render one condition's learning-curve CSV. Bits use shortest-roundtrip
/// float formatting, so summing the parsed CSV reproduces the JSON totals
/// exactly.
pub fn condition_csv(condition: &ConditionReport) -> String {
    let mut out = String::from("seed,block,block_start,block_end,bits,chosen_model\n");
    for run in &condition.seed_runs {
        for b in &run.blocks {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                run.seed, b.block, b.start, b.end, b.bits, b.chosen_model
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

pub fn report_json(report: &Report) -> String {
    let mut text =
        serde_json::to_string_pretty(report).expect("report serialization is infallible");
    text.push('\n');
    text
}

/// Write `report.json` and one `<condition>.csv` per condition into
/// `out_dir`. All contents are rendered before anything is written, and each
/// file lands via a temp-file rename, so a failed run leaves no partial
/// artifacts.
pub fn write_outputs(report: &Report, out_dir: &Path) -> Result<()> {
    let mut files: Vec<(String, String)> = vec![("report.json".into(), report_json(report))];
    for condition in &report.conditions {
        files.push((format!("{}.csv", condition.name), condition_csv(condition)));
    }
    std::fs::create_dir_all(out_dir)?;
    for (name, contents) in files {
        let tmp = out_dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, contents)?;
        std::fs::rename(&tmp, out_dir.join(&name))?;
    }
    Ok(())
}

fn conditions_from_report(
    v: &serde_json::Value,
    which: &str,
) -> Result<Vec<(String, Vec<(u64, u64, f64)>)>> {
    let conditions = v["conditions"]
        .as_array()
        .ok_or_else(|| Error::Data(format!("report {which}: missing conditions")))?;
    conditions
        .iter()
        .map(|c| {
            let name = c["name"]
                .as_str()
                .ok_or_else(|| Error::Data(format!("report {which}: condition without name")))?
                .to_string();
            let runs = c["seed_runs"]
                .as_array()
                .ok_or_else(|| Error::Data(format!("report {which}: missing seed_runs")))?;
            let totals = runs
                .iter()
                .map(|r| {
                    match (
                        r["seed"].as_u64(),
                        r["permutation_id"].as_u64(),
                        r["total_bits"].as_f64(),
                    ) {
                        (Some(s), Some(p), Some(t)) => Ok((s, p, t)),
                        _ => Err(Error::Data(format!("report {which}: malformed seed run"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((name, totals))
        })
        .collect()
}

/// Recompute paired deltas between two stored reports (the `delta` CLI
/// verb): for every condition name present in both, delta = A − B from the
/// recorded per-seed totals.
pub fn delta_between_reports(
    a: &serde_json::Value,
    b: &serde_json::Value,
) -> Result<Vec<DeltaReport>> {
    let conds_a = conditions_from_report(a, "A")?;
    let conds_b = conditions_from_report(b, "B")?;
    let mut deltas = Vec::new();
    for (name, runs_a) in &conds_a {
        if let Some((_, runs_b)) = conds_b.iter().find(|(n, _)| n == name) {
            deltas.push(compare_conditions(
                &crate::engine::replay_condition(name.clone(), runs_a.clone()),
                &crate::engine::replay_condition(name.clone(), runs_b.clone()),
            )?);
        }
    }
    if deltas.is_empty() {
        return Err(Error::Data("the reports share no condition names".into()));
    }
    Ok(deltas)
}
