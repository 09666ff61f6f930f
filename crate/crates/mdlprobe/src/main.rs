//! Command-line interface: run experiments, validate configs, recompute
//! deltas from saved reports, and generate synthetic datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mdlprobe::config::ExperimentConfig;
use mdlprobe::data::save_jsonl;
use mdlprobe::error::{Error, Result};
use mdlprobe::generators::{
    gen_count_comparison, gen_fraction_regression, gen_order_task, gen_wordlist_bias_task,
};
use mdlprobe::runner::{
    delta_between_reports, materialize_dataset, run_experiment, write_outputs,
};

#[derive(Parser)]
#[command(name = "mdlprobe", version, about = "Block-wise prequential codelength probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the engine (0 = all cores). Results are identical
    /// for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write report.json plus per-condition
    /// learning-curve CSVs.
    Run {
        config: PathBuf,
        /// Output directory for report.json and CSVs.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the config's dataset cap.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Check a config (and that its dataset materializes) without running.
    Validate { config: PathBuf },
    /// Recompute paired deltas between two saved reports.
    Delta { report_a: PathBuf, report_b: PathBuf },
    /// Generate a synthetic dataset as JSONL.
    Gen {
        #[command(subcommand)]
        task: GenTask,
    },
}

#[derive(Args)]
struct GenCommon {
    /// Where to write the JSONL dataset.
    #[arg(long, default_value = "dataset.jsonl")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4096)]
    n: usize,
}

#[derive(Subcommand)]
enum GenTask {
    /// Token bags labeled by which of two tracked tokens occurs more often;
    /// oracle counts ride along as an auxiliary field.
    CountComparison {
        #[command(flatten)]
        common: GenCommon,
        /// Surface forms per token group; more forms make bag-of-tokens
        /// counting harder to learn.
        #[arg(long, default_value_t = 300)]
        vocab: usize,
        #[arg(long, default_value_t = 9)]
        max_count: usize,
    },
    /// Token sequences labeled by the lexicographic order of the first and
    /// last token.
    OrderTask {
        #[command(flatten)]
        common: GenCommon,
    },
    /// Filler text where one word list marks the positive class and a second
    /// list appears label-independently.
    WordlistBias {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long, value_delimiter = ',', default_value = "apple,plum,pear,fig")]
        list_a: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "iron,zinc,lead,tin")]
        list_b: Vec<String>,
    },
    /// Bounded-regression task: the label is the scaled fraction of a marker
    /// token.
    FractionRegression {
        #[command(flatten)]
        common: GenCommon,
    },
}

fn execute(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {} jobs: {e}", cli.jobs)))?;
    }
    match cli.command {
        Command::Run { config, out, cap } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if let Some(cap) = cap {
                config.cap = Some(cap);
                config.validate()?;
            }
            let report = run_experiment(&config)?;
            write_outputs(&report, &out)?;
            for d in &report.deltas {
                println!(
                    "{} vs {}: delta {:+.3} bits (stderr {}) -> {:?}",
                    d.condition_a,
                    d.condition_b,
                    d.delta_mean,
                    d.delta_stderr.map_or("n/a".into(), |s| format!("{s:.3}")),
                    d.verdict
                );
            }
            println!("report written to {}", out.join("report.json").display());
            Ok(())
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::from_file(&config)?;
            let dataset = materialize_dataset(&config)?;
            println!(
                "ok: {} examples, {} conditions, {} learners, {} seeds",
                dataset.examples.len(),
                config.conditions.len(),
                config.learners.len(),
                config.seeds.len()
            );
            Ok(())
        }
        Command::Delta { report_a, report_b } => {
            let load = |p: &PathBuf| -> Result<serde_json::Value> {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Data(format!("invalid report {}: {e}", p.display())))
            };
            let deltas = delta_between_reports(&load(&report_a)?, &load(&report_b)?)?;
            println!("{}", serde_json::to_string_pretty(&deltas).expect("serializable"));
            Ok(())
        }
        Command::Gen { task } => {
            let (dataset, common) = match task {
                GenTask::CountComparison { common, vocab, max_count } => {
                    (gen_count_comparison(common.n, vocab, max_count, common.seed)?, common)
                }
                GenTask::OrderTask { common } => (gen_order_task(common.n, common.seed)?, common),
                GenTask::WordlistBias { common, list_a, list_b } => {
                    (gen_wordlist_bias_task(common.n, &list_a, &list_b, common.seed)?, common)
                }
                GenTask::FractionRegression { common } => {
                    (gen_fraction_regression(common.n, common.seed)?, common)
                }
            };
            save_jsonl(&dataset, &common.out)?;
            println!("wrote {} examples to {}", dataset.examples.len(), common.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
