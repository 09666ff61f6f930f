//! Declarative experiment configuration.
//!
//! An experiment is a single JSON file: where the data comes from, the block
//! schedule, the seed list, the learner roster, and the list of named
//! conditions (input transforms) with one of them designated the baseline.
//! All defaults are echoed into the report so a run is reproducible from the
//! report alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::ScheduleParams;
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::transforms::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Path { path: PathBuf },
    Generator { generator: GeneratorSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum GeneratorSpec {
    CountComparison {
        n: usize,
        #[serde(default = "default_vocab")]
        vocab: usize,
        #[serde(default = "default_max_count")]
        max_count: usize,
        #[serde(default)]
        seed: u64,
    },
    OrderTask {
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    WordlistBias {
        n: usize,
        #[serde(default = "default_list_a")]
        list_a: Vec<String>,
        #[serde(default = "default_list_b")]
        list_b: Vec<String>,
        #[serde(default)]
        seed: u64,
    },
    FractionRegression {
        n: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_vocab() -> usize {
    300
}

fn default_max_count() -> usize {
    9
}

fn default_list_a() -> Vec<String> {
    ["apple", "plum", "pear", "fig"].map(String::from).to_vec()
}

fn default_list_b() -> Vec<String> {
    ["iron", "zinc", "lead", "tin"].map(String::from).to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Cap applied when loading a dataset from disk (seeded subsample).
    /// Generated datasets already have an exact size and are not capped.
    #[serde(default = "default_cap")]
    pub cap: Option<usize>,
    #[serde(default)]
    pub schedule: ScheduleParams,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_roster")]
    pub learners: Vec<LearnerSpec>,
    pub conditions: Vec<Condition>,
    pub baseline: String,
}

fn default_cap() -> Option<usize> {
    Some(10_000)
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_roster() -> Vec<LearnerSpec> {
    vec![LearnerSpec::prior(), LearnerSpec::naive_bayes(), LearnerSpec::logistic()]
}

fn name_is_portable(name: &str) -> bool {
    !name.is_empty()
        && name.chars().any(|c| c != '.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural validation that needs no data access. Label-space-dependent
    /// learner checks happen once the dataset is available.
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::Config("config needs at least one condition".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for c in &self.conditions {
            if !name_is_portable(&c.name) {
                return Err(Error::Config(format!(
                    "condition name '{}' must be non-empty and use only [A-Za-z0-9_.-] \
                     (it becomes a file name)",
                    c.name
                )));
            }
            if !names.insert(&c.name) {
                return Err(Error::Config(format!("duplicate condition name '{}'", c.name)));
            }
            c.transform.validate()?;
        }
        if !names.contains(&self.baseline) {
            return Err(Error::Config(format!(
                "baseline '{}' is not among the conditions",
                self.baseline
            )));
        }
        if self.learners.is_empty() {
            return Err(Error::Config("learner roster is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        let mut seeds = std::collections::BTreeSet::new();
        for &s in &self.seeds {
            if !seeds.insert(s) {
                return Err(Error::Config(format!("duplicate seed {s}")));
            }
        }
        if let Some(0) = self.cap {
            return Err(Error::Config("cap must be positive".into()));
        }
        Ok(())
    }
}
