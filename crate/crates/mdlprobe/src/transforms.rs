//! Capability functions: deterministic, seedable rewrites of examples.
//!
//! A transform maps an example to a rewritten example over the same label.
//! Randomized transforms (shuffling, random masking) derive an example-scoped
//! sub-seed from `(seed, example index)`, so their output is stable under
//! dataset reordering within a seed run.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Example;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Placeholder written over masked tokens.
pub const MASK_TOKEN: &str = "_";
/// Placeholder written over marked tokens in `pattern_only`.
pub const PATTERN_TOKEN: &str = "*";

const SHUFFLE_TAG: u64 = 0x5348_4646;
const RANDOM_MASK_TAG: u64 = 0x4d41_534b;

fn default_marker() -> String {
    ">".to_string()
}

/// How a random-masking transform decides its per-example mask count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskRate {
    /// Mask `round(rate * len)` tokens of every example.
    Fraction(f64),
    /// Mask exactly as many tokens as the referenced transform masks on the
    /// same example (the matched-random control).
    MatchedTo(Box<Transform>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    /// Pass the example through unchanged.
    Identity,
    /// Prepend a marker token followed by the named auxiliary token list.
    AppendAuxiliary {
        field: String,
        #[serde(default = "default_marker")]
        marker: String,
    },
    /// Replace every token found in the word set with the mask placeholder.
    MaskByWordlist { words: BTreeSet<String> },
    /// Replace every token whose tag (from the named per-token annotation)
    /// is in the tag set.
    MaskByTag { annotation: String, tags: BTreeSet<String> },
    /// Mask uniformly chosen token positions.
    MaskRandom { rate: MaskRate },
    /// Permute the token order with the example-scoped sub-seed.
    ShuffleTokens,
    /// Replace the whole token sequence with the single token `len=<count>`.
    LengthOnly,
    /// Keep tokens marked true in the named boolean annotation; mask the rest.
    KeepMarkedOnly { marker_field: String },
    /// Mask tokens marked true in the named boolean annotation.
    MaskMarked { marker_field: String },
    /// Keep only the mark pattern: marked tokens become `*`, others `_`.
    PatternOnly { marker_field: String },
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match self {
            Transform::MaskRandom { rate: MaskRate::Fraction(r) } => {
                if !(0.0..=1.0).contains(r) {
                    return Err(Error::Config(format!("mask rate must be in [0, 1], got {r}")));
                }
                Ok(())
            }
            Transform::MaskRandom { rate: MaskRate::MatchedTo(inner) } => {
                inner.validate()?;
                if !inner.is_masking() {
                    return Err(Error::NotApplicable(format!("{inner:?}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Masking transforms are the ones a matched-random control exists for.
    pub fn is_masking(&self) -> bool {
        matches!(
            self,
            Transform::MaskByWordlist { .. }
                | Transform::MaskByTag { .. }
                | Transform::MaskRandom { rate: MaskRate::Fraction(_) }
                | Transform::KeepMarkedOnly { .. }
                | Transform::MaskMarked { .. }
        )
    }
}

fn marks_for<'a>(ex: &'a Example, field: &str, index: usize) -> Result<&'a Vec<bool>> {
    ex.marks
        .get(field)
        .ok_or_else(|| Error::AnnotationMissing { field: field.to_string(), index })
}

fn mask_positions(ex: &Example, positions: impl Iterator<Item = usize>) -> Example {
    let mut out = ex.clone();
    for p in positions {
        out.tokens[p] = MASK_TOKEN.to_string();
    }
    out
}

/// Number of tokens a transform masks on this example, and the token count.
fn masked_count(t: &Transform, ex: &Example, seed: u64, index: usize) -> Result<(usize, usize)> {
    let out = apply(t, ex, seed, index)?;
    let masked = ex
        .tokens
        .iter()
        .zip(&out.tokens)
        .filter(|(before, after)| after.as_str() == MASK_TOKEN && before.as_str() != MASK_TOKEN)
        .count();
    Ok((masked, ex.tokens.len()))
}

/// Apply a transform to one example. Pure given `(t, example, seed, index)`;
/// the label is never changed.
pub fn apply(t: &Transform, ex: &Example, seed: u64, index: usize) -> Result<Example> {
    match t {
        Transform::Identity => Ok(ex.clone()),

        Transform::AppendAuxiliary { field, marker } => {
            let aux = ex
                .aux
                .get(field)
                .ok_or_else(|| Error::AnnotationMissing { field: field.clone(), index })?;
            let mut tokens = Vec::with_capacity(aux.len() + ex.tokens.len() + 1);
            if !marker.is_empty() {
                tokens.push(marker.clone());
            }
            tokens.extend(aux.iter().cloned());
            let prefix = tokens.len();
            tokens.extend(ex.tokens.iter().cloned());
            let mut out = ex.clone();
            out.tokens = tokens;
            // Pad per-token annotations over the prepended region so they
            // stay aligned with the token sequence.
            for tags in out.tags.values_mut() {
                let mut padded = vec![String::new(); prefix];
                padded.append(tags);
                *tags = padded;
            }
            for marks in out.marks.values_mut() {
                let mut padded = vec![false; prefix];
                padded.append(marks);
                *marks = padded;
            }
            Ok(out)
        }

        Transform::MaskByWordlist { words } => Ok(mask_positions(
            ex,
            ex.tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| words.contains(*t))
                .map(|(i, _)| i),
        )),

        Transform::MaskByTag { annotation, tags } => {
            let tag_row = ex
                .tags
                .get(annotation)
                .ok_or_else(|| Error::AnnotationMissing { field: annotation.clone(), index })?;
            Ok(mask_positions(
                ex,
                tag_row
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| tags.contains(*t))
                    .map(|(i, _)| i),
            ))
        }

        Transform::MaskRandom { rate } => {
            t.validate()?;
            let len = ex.tokens.len();
            let k = match rate {
                MaskRate::Fraction(r) => ((r * len as f64) + 0.5).floor() as usize,
                MaskRate::MatchedTo(inner) => {
                    let (masked, ref_len) = masked_count(inner, ex, seed, index)?;
                    // Same example, so the fraction round-trips to the count.
                    ((masked as f64 / ref_len.max(1) as f64 * len as f64) + 0.5).floor() as usize
                }
            };
            let k = k.min(len);
            let mut positions: Vec<usize> = (0..len).collect();
            positions.shuffle(&mut rng_from(&[seed, index as u64, RANDOM_MASK_TAG]));
            Ok(mask_positions(ex, positions.into_iter().take(k)))
        }

        Transform::ShuffleTokens => {
            let mut order: Vec<usize> = (0..ex.tokens.len()).collect();
            order.shuffle(&mut rng_from(&[seed, index as u64, SHUFFLE_TAG]));
            let mut out = ex.clone();
            out.tokens = order.iter().map(|&i| ex.tokens[i].clone()).collect();
            for tags in out.tags.values_mut() {
                let orig = std::mem::take(tags);
                *tags = order.iter().map(|&i| orig[i].clone()).collect();
            }
            for marks in out.marks.values_mut() {
                let orig = std::mem::take(marks);
                *marks = order.iter().map(|&i| orig[i]).collect();
            }
            Ok(out)
        }

        Transform::LengthOnly => {
            let mut out = ex.clone();
            out.tokens = vec![format!("len={}", ex.tokens.len())];
            out.tags.clear();
            out.marks.clear();
            Ok(out)
        }

        Transform::KeepMarkedOnly { marker_field } => {
            let marks = marks_for(ex, marker_field, index)?.clone();
            Ok(mask_positions(
                ex,
                marks.iter().enumerate().filter(|(_, m)| !**m).map(|(i, _)| i),
            ))
        }

        Transform::MaskMarked { marker_field } => {
            let marks = marks_for(ex, marker_field, index)?.clone();
            Ok(mask_positions(
                ex,
                marks.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i),
            ))
        }

        Transform::PatternOnly { marker_field } => {
            let marks = marks_for(ex, marker_field, index)?.clone();
            let mut out = ex.clone();
            out.tokens = marks
                .iter()
                .map(|m| if *m { PATTERN_TOKEN.to_string() } else { MASK_TOKEN.to_string() })
                .collect();
            Ok(out)
        }
    }
}

/// The matched-random control for a masking transform: masks the same
/// per-example fraction of tokens, but at uniformly chosen positions.
pub fn matched_control_for(t: &Transform) -> Result<Transform> {
    if !t.is_masking() {
        return Err(Error::NotApplicable(format!("{t:?}")));
    }
    Ok(Transform::MaskRandom { rate: MaskRate::MatchedTo(Box::new(t.clone())) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codelength::Label;
    use proptest::prelude::*;

    fn example(tokens: &[&str]) -> Example {
        Example::new(tokens.iter().map(|t| t.to_string()).collect(), Label::Class(0))
    }

    fn wordlist(words: &[&str]) -> Transform {
        Transform::MaskByWordlist { words: words.iter().map(|w| w.to_string()).collect() }
    }

    #[test]
    fn wordlist_mask_preserves_positions() {
        let out = apply(&wordlist(&["cat"]), &example(&["the", "cat", "sat"]), 0, 0).unwrap();
        assert_eq!(out.tokens, vec!["the", "_", "sat"]);
    }

    #[test]
    fn matched_control_masks_same_count() {
        let t = wordlist(&["cat"]);
        let control = matched_control_for(&t).unwrap();
        let ex = example(&["the", "cat", "sat"]);
        let out = apply(&control, &ex, 7, 0).unwrap();
        assert_eq!(out.tokens.iter().filter(|t| *t == MASK_TOKEN).count(), 1);

        // Reference masks nothing here, so neither does the control.
        let out = apply(&control, &example(&["a", "b"]), 7, 0).unwrap();
        assert_eq!(out.tokens.iter().filter(|t| *t == MASK_TOKEN).count(), 0);
    }

    #[test]
    fn matched_control_requires_masking_transform() {
        assert!(matches!(
            matched_control_for(&Transform::Identity),
            Err(Error::NotApplicable(_))
        ));
        assert!(matches!(
            matched_control_for(&Transform::ShuffleTokens),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn length_only() {
        let out = apply(&Transform::LengthOnly, &example(&["a", "b", "c", "d", "e", "f", "g"]), 0, 0)
            .unwrap();
        assert_eq!(out.tokens, vec!["len=7"]);
    }

    #[test]
    fn append_auxiliary_prepends_marker_and_field() {
        let mut ex = example(&["q1", "q2"]);
        ex.aux.insert("oracle".into(), vec!["c1=3".into(), "c2=1".into()]);
        let t = Transform::AppendAuxiliary { field: "oracle".into(), marker: ">".into() };
        let out = apply(&t, &ex, 0, 0).unwrap();
        assert_eq!(out.tokens, vec![">", "c1=3", "c2=1", "q1", "q2"]);
    }

    #[test]
    fn append_auxiliary_missing_field_names_example_index() {
        let t = Transform::AppendAuxiliary { field: "oracle".into(), marker: ">".into() };
        let err = apply(&t, &example(&["a"]), 0, 41).unwrap_err();
        assert!(matches!(err, Error::AnnotationMissing { index: 41, .. }));
    }

    #[test]
    fn marked_transforms() {
        let mut ex = example(&["a", "b", "c"]);
        ex.marks.insert("r".into(), vec![true, false, true]);
        let keep = apply(&Transform::KeepMarkedOnly { marker_field: "r".into() }, &ex, 0, 0).unwrap();
        assert_eq!(keep.tokens, vec!["a", "_", "c"]);
        let mask = apply(&Transform::MaskMarked { marker_field: "r".into() }, &ex, 0, 0).unwrap();
        assert_eq!(mask.tokens, vec!["_", "b", "_"]);
        let pat = apply(&Transform::PatternOnly { marker_field: "r".into() }, &ex, 0, 0).unwrap();
        assert_eq!(pat.tokens, vec!["*", "_", "*"]);
    }

    #[test]
    fn mask_by_tag() {
        let mut ex = example(&["run", "fast", "now"]);
        ex.tags.insert("pos".into(), vec!["VERB".into(), "ADV".into(), "ADV".into()]);
        let t = Transform::MaskByTag {
            annotation: "pos".into(),
            tags: ["ADV".to_string()].into_iter().collect(),
        };
        let out = apply(&t, &ex, 0, 0).unwrap();
        assert_eq!(out.tokens, vec!["run", "_", "_"]);
    }

    #[test]
    fn mask_rate_above_one_rejected() {
        let t = Transform::MaskRandom { rate: MaskRate::Fraction(1.5) };
        assert!(matches!(t.validate(), Err(Error::Config(_))));
        assert!(apply(&t, &example(&["a", "b"]), 0, 0).is_err());
    }

    #[test]
    fn disjoint_wordlist_masks_commute() {
        let a = wordlist(&["x"]);
        let b = wordlist(&["y"]);
        let ex = example(&["x", "m", "y", "x"]);
        let ab = apply(&b, &apply(&a, &ex, 0, 0).unwrap(), 0, 0).unwrap();
        let ba = apply(&a, &apply(&b, &ex, 0, 0).unwrap(), 0, 0).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.tokens, vec!["_", "m", "_", "_"]);
    }

    proptest! {
        #[test]
        fn apply_is_pure_and_preserves_labels(
            tokens in proptest::collection::vec("[a-d]{1,3}", 1..15),
            seed in 0u64..100,
            index in 0usize..100,
            rate in 0.0f64..1.0,
        ) {
            let ex = {
                let mut e = example(&tokens.iter().map(String::as_str).collect::<Vec<_>>());
                e.label = Label::Class(1);
                e.marks.insert("r".into(), tokens.iter().map(|t| t.len() == 1).collect());
                e
            };
            let transforms = vec![
                Transform::Identity,
                wordlist(&["a", "ab"]),
                Transform::MaskRandom { rate: MaskRate::Fraction(rate) },
                Transform::ShuffleTokens,
                Transform::LengthOnly,
                Transform::KeepMarkedOnly { marker_field: "r".into() },
                matched_control_for(&wordlist(&["a"])).unwrap(),
            ];
            for t in &transforms {
                let out1 = apply(t, &ex, seed, index).unwrap();
                let out2 = apply(t, &ex, seed, index).unwrap();
                prop_assert_eq!(&out1, &out2);
                prop_assert_eq!(&out1.label, &ex.label);
            }
        }

        #[test]
        fn shuffle_preserves_token_multiset(
            tokens in proptest::collection::vec("[a-d]{1,3}", 0..20),
            seed in 0u64..100,
        ) {
            let ex = example(&tokens.iter().map(String::as_str).collect::<Vec<_>>());
            let out = apply(&Transform::ShuffleTokens, &ex, seed, 3).unwrap();
            let mut before = ex.tokens.clone();
            let mut after = out.tokens.clone();
            before.sort();
            after.sort();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn matched_control_count_within_one(
            tokens in proptest::collection::vec("[a-f]{1,2}", 1..30),
            seed in 0u64..50,
        ) {
            let ex = example(&tokens.iter().map(String::as_str).collect::<Vec<_>>());
            let t = wordlist(&["a", "b", "cc"]);
            let control = matched_control_for(&t).unwrap();
            let (k_ref, _) = masked_count(&t, &ex, seed, 0).unwrap();
            let (k_ctl, _) = masked_count(&control, &ex, seed, 0).unwrap();
            prop_assert!((k_ref as i64 - k_ctl as i64).abs() <= 1);
        }
    }
}
