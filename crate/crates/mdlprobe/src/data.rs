//! Dataset ingestion and validation.
//!
//! The on-disk format is JSONL, one example per line:
//!
//! ```text
//! {"label_space": {"kind": "bounded_continuous", "lo": 0.0, "hi": 5.0}}   <- optional header
//! {"tokens": ["a", "b"], "label": "yes"}
//! {"text": "c d e", "label": "no", "annotations": {"tags": {"pos": ["X", "Y", "Z"]}}}
//! ```
//!
//! `tokens` may be replaced by `text`, which is whitespace-tokenized.
//! Categorical labels may be strings (mapped to class indices by first
//! appearance) or integers (used as class indices directly). Continuous
//! labels require a `label_space` header line. Annotations are named arrays:
//! `tags` and `marks` are per-token (length must match `tokens`), `aux` is a
//! free-standing token list.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codelength::{Label, LabelSpace};
use crate::error::{Error, Result};
use crate::rng::shuffled_indices;

/// One example: a token sequence, a label, and optional annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<String>,
    pub label: Label,
    /// Per-token string annotations (e.g. part-of-speech tags).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, Vec<String>>,
    /// Per-token boolean annotations (e.g. rationale marks).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub marks: BTreeMap<String, Vec<bool>>,
    /// Named auxiliary token lists (e.g. an explanation or oracle hint).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, Vec<String>>,
}

impl Example {
    pub fn new(tokens: Vec<String>, label: Label) -> Example {
        Example { tokens, label, tags: BTreeMap::new(), marks: BTreeMap::new(), aux: BTreeMap::new() }
    }
}

/// An ordered collection of examples over one label space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub examples: Vec<Example>,
    pub space: LabelSpace,
    /// For string-labeled data: class index -> original label string.
    pub label_names: Option<Vec<String>>,
    /// Checksum of the source file, when loaded from disk.
    pub checksum: Option<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Keep at most this many examples, chosen as the first `cap` after a
    /// seeded shuffle.
    pub cap: Option<usize>,
    pub cap_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { cap: Some(10_000), cap_seed: 0 }
    }
}

fn data_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line}: {msg}"))
}

fn parse_string_array(v: &Value, field: &str, line: usize) -> Result<Vec<String>> {
    v.as_array()
        .ok_or_else(|| data_err(line, format!("'{field}' must be an array")))?
        .iter()
        .map(|t| {
            t.as_str()
                .map(str::to_owned)
                .ok_or_else(|| data_err(line, format!("'{field}' must contain strings")))
        })
        .collect()
}

enum RawLabel {
    Str(String),
    Int(usize),
    Real(f64),
}

fn parse_example(obj: &serde_json::Map<String, Value>, line: usize) -> Result<(Example, RawLabel)> {
    let tokens = match (obj.get("tokens"), obj.get("text")) {
        (Some(t), _) => parse_string_array(t, "tokens", line)?,
        (None, Some(Value::String(s))) => s.split_whitespace().map(str::to_owned).collect(),
        (None, Some(_)) => return Err(data_err(line, "'text' must be a string")),
        (None, None) => return Err(data_err(line, "missing 'tokens' (or 'text')")),
    };

    let raw_label = match obj.get("label") {
        Some(Value::String(s)) => RawLabel::Str(s.clone()),
        Some(Value::Number(n)) => {
            if let Some(i) = n.as_u64() {
                RawLabel::Int(i as usize)
            } else if n.is_i64() {
                return Err(data_err(line, "negative integer label"));
            } else {
                RawLabel::Real(n.as_f64().unwrap())
            }
        }
        Some(_) => return Err(data_err(line, "'label' must be a string or number")),
        None => return Err(data_err(line, "missing 'label'")),
    };

    let mut ex = Example::new(tokens, Label::Class(0));
    if let Some(ann) = obj.get("annotations") {
        let ann = ann
            .as_object()
            .ok_or_else(|| data_err(line, "'annotations' must be an object"))?;
        if let Some(tags) = ann.get("tags") {
            let tags = tags
                .as_object()
                .ok_or_else(|| data_err(line, "'annotations.tags' must be an object"))?;
            for (name, arr) in tags {
                let vals = parse_string_array(arr, name, line)?;
                if vals.len() != ex.tokens.len() {
                    return Err(data_err(
                        line,
                        format!(
                            "tag annotation '{name}' has length {} but there are {} tokens",
                            vals.len(),
                            ex.tokens.len()
                        ),
                    ));
                }
                ex.tags.insert(name.clone(), vals);
            }
        }
        if let Some(marks) = ann.get("marks") {
            let marks = marks
                .as_object()
                .ok_or_else(|| data_err(line, "'annotations.marks' must be an object"))?;
            for (name, arr) in marks {
                let vals: Vec<bool> = arr
                    .as_array()
                    .ok_or_else(|| data_err(line, format!("'{name}' must be an array")))?
                    .iter()
                    .map(|b| b.as_bool().ok_or_else(|| data_err(line, format!("'{name}' must contain booleans"))))
                    .collect::<Result<_>>()?;
                if vals.len() != ex.tokens.len() {
                    return Err(data_err(
                        line,
                        format!(
                            "mark annotation '{name}' has length {} but there are {} tokens",
                            vals.len(),
                            ex.tokens.len()
                        ),
                    ));
                }
                ex.marks.insert(name.clone(), vals);
            }
        }
        if let Some(aux) = ann.get("aux") {
            let aux = aux
                .as_object()
                .ok_or_else(|| data_err(line, "'annotations.aux' must be an object"))?;
            for (name, arr) in aux {
                ex.aux.insert(name.clone(), parse_string_array(arr, name, line)?);
            }
        }
    }
    Ok((ex, raw_label))
}

/// Load a JSONL dataset, validating every line and resolving the label space.
pub fn load_jsonl(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);

    let mut checksum: u64 = 0xcbf2_9ce4_8422_2325;
    let mut lines: Vec<String> = Vec::new();
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        for b in buf.as_bytes() {
            checksum ^= *b as u64;
            checksum = checksum.wrapping_mul(0x0000_0100_0000_01b3);
        }
        if !buf.trim().is_empty() {
            lines.push(buf.trim_end_matches(['\n', '\r']).to_owned());
        }
    }

    let mut declared_space: Option<LabelSpace> = None;
    let mut start = 0;
    if let Some(first) = lines.first() {
        if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(first) {
            if let Some(space) = obj.get("label_space") {
                let space: LabelSpace = serde_json::from_value(space.clone())
                    .map_err(|e| data_err(1, format!("bad label_space header: {e}")))?;
                space.validate()?;
                declared_space = Some(space);
                start = 1;
            }
        }
    }

    let mut examples = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, line) in lines[start..].iter().enumerate() {
        let lineno = start + i + 1;
        let value: Value = serde_json::from_str(line)
            .map_err(|e| data_err(lineno, format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| data_err(lineno, "each line must be a JSON object"))?;
        let (ex, raw) = parse_example(obj, lineno)?;
        examples.push(ex);
        raw_labels.push(raw);
    }
    if examples.is_empty() {
        return Err(Error::Data(format!("{}: no examples", path.display())));
    }

    // Resolve labels against the declared or inferred space.
    let mut label_names: Option<Vec<String>> = None;
    let space = match declared_space {
        Some(space @ LabelSpace::BoundedContinuous { lo, hi }) => {
            for (ex, raw) in examples.iter_mut().zip(&raw_labels) {
                let v = match raw {
                    RawLabel::Real(v) => *v,
                    RawLabel::Int(i) => *i as f64,
                    RawLabel::Str(s) => {
                        return Err(Error::Data(format!("string label '{s}' in a continuous label space")))
                    }
                };
                if v < lo || v > hi {
                    return Err(Error::Data(format!("label {v} outside [{lo}, {hi}]")));
                }
                ex.label = Label::Value(v);
            }
            space
        }
        other => {
            let mut names: Vec<String> = Vec::new();
            let mut max_int = 0usize;
            let mut saw_str = false;
            let mut saw_int = false;
            for (ex, raw) in examples.iter_mut().zip(&raw_labels) {
                match raw {
                    RawLabel::Str(s) => {
                        saw_str = true;
                        let idx = names.iter().position(|n| n == s).unwrap_or_else(|| {
                            names.push(s.clone());
                            names.len() - 1
                        });
                        ex.label = Label::Class(idx);
                    }
                    RawLabel::Int(i) => {
                        saw_int = true;
                        max_int = max_int.max(*i);
                        ex.label = Label::Class(*i);
                    }
                    RawLabel::Real(v) => {
                        return Err(Error::Data(format!(
                            "non-integer label {v} requires a bounded_continuous label_space header"
                        )))
                    }
                }
            }
            if saw_str && saw_int {
                return Err(Error::Data("mixed string and integer labels".into()));
            }
            let num_classes = match other {
                Some(LabelSpace::Categorical { num_classes }) => num_classes,
                _ if saw_str => names.len().max(2),
                _ => (max_int + 1).max(2),
            };
            for ex in &examples {
                if let Label::Class(c) = ex.label {
                    if c >= num_classes {
                        return Err(Error::Data(format!(
                            "class index {c} outside {num_classes}-class space"
                        )));
                    }
                }
            }
            if saw_str {
                label_names = Some(names);
            }
            LabelSpace::Categorical { num_classes }
        }
    };

    // Cap: keep the first `cap` examples of a seeded shuffle.
    if let Some(cap) = opts.cap {
        if examples.len() > cap {
            let perm = shuffled_indices(opts.cap_seed, examples.len());
            let mut kept: Vec<Example> = perm[..cap].iter().map(|&i| examples[i].clone()).collect();
            std::mem::swap(&mut examples, &mut kept);
        }
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Dataset {
        name,
        examples,
        space,
        label_names,
        checksum: Some(format!("{checksum:016x}")),
    })
}

/// Serialize a dataset back to JSONL (header line first for continuous
/// spaces, or when class labels have no recorded names).
pub fn save_jsonl(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    match dataset.space {
        LabelSpace::BoundedContinuous { .. } => {
            let header = serde_json::json!({ "label_space": dataset.space });
            writeln!(out, "{header}").unwrap();
        }
        LabelSpace::Categorical { .. } if dataset.label_names.is_none() => {
            let header = serde_json::json!({ "label_space": dataset.space });
            writeln!(out, "{header}").unwrap();
        }
        _ => {}
    }
    for ex in &dataset.examples {
        let label = match (&ex.label, &dataset.label_names) {
            (Label::Class(c), Some(names)) => Value::String(names[*c].clone()),
            (Label::Class(c), None) => Value::from(*c as u64),
            (Label::Value(v), _) => Value::from(*v),
        };
        let mut obj = serde_json::Map::new();
        obj.insert("tokens".into(), serde_json::to_value(&ex.tokens).unwrap());
        obj.insert("label".into(), label);
        let mut ann = serde_json::Map::new();
        if !ex.tags.is_empty() {
            ann.insert("tags".into(), serde_json::to_value(&ex.tags).unwrap());
        }
        if !ex.marks.is_empty() {
            ann.insert("marks".into(), serde_json::to_value(&ex.marks).unwrap());
        }
        if !ex.aux.is_empty() {
            ann.insert("aux".into(), serde_json::to_value(&ex.aux).unwrap());
        }
        if !ann.is_empty() {
            obj.insert("annotations".into(), Value::Object(ann));
        }
        writeln!(out, "{}", Value::Object(obj)).unwrap();
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
