//! Synthetic task generators for validation experiments.
//!
//! Each generator is deterministic per seed and class-balanced by
//! construction: target labels alternate and examples are resampled until
//! they realize the target, so the label prior is exactly 1/2 up to the odd
//! example.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::codelength::{Label, LabelSpace};
use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::rng::rng_from;

const COUNT_TAG: u64 = 0x434e_5431;
const ORDER_TAG: u64 = 0x4f52_4431;
const BIAS_TAG: u64 = 0x4249_4153;
const FRAC_TAG: u64 = 0x4652_4143;

/// Count-comparison task: each example is a shuffled token bag with `c1`
/// items drawn from a group-A vocabulary (`a0..a{vocab-1}`), `c2` items from
/// a group-B vocabulary, and a few distractors; the label says whether group
/// A outnumbers group B (`c1 > c2`). With many surface forms per group,
/// counting group membership from a bag of tokens takes a learner a long
/// prefix to acquire, while the auxiliary field `oracle` spells the two
/// counts out (`["c1=3", "c2=1"]`), playing the role of an oracle subanswer.
pub fn gen_count_comparison(n: usize, vocab: usize, max_count: usize, seed: u64) -> Result<Dataset> {
    if n < 100 {
        return Err(Error::Config(format!("count-comparison task needs n >= 100, got {n}")));
    }
    if vocab < 1 {
        return Err(Error::Config("count-comparison task needs vocab >= 1".into()));
    }
    if max_count < 1 {
        return Err(Error::Config(format!("max_count must be at least 1, got {max_count}")));
    }
    if max_count < 2 {
        return Err(Error::Config("max_count of 1 admits only ties".into()));
    }
    let mut rng = rng_from(&[seed, COUNT_TAG]);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let target = i % 2 == 1;
        let (c1, c2) = loop {
            let c1 = rng.random_range(1..=max_count);
            let c2 = rng.random_range(1..=max_count);
            if c1 != c2 && (c1 > c2) == target {
                break (c1, c2);
            }
        };
        let mut tokens: Vec<String> = Vec::new();
        for _ in 0..c1 {
            tokens.push(format!("a{}", rng.random_range(0..vocab)));
        }
        for _ in 0..c2 {
            tokens.push(format!("b{}", rng.random_range(0..vocab)));
        }
        let distractors = rng.random_range(2..=10);
        for _ in 0..distractors {
            tokens.push(format!("w{}", rng.random_range(0..vocab)));
        }
        tokens.shuffle(&mut rng);
        let mut ex = Example::new(tokens, Label::Class(target as usize));
        ex.aux.insert("oracle".into(), vec![format!("c1={c1}"), format!("c2={c2}")]);
        examples.push(ex);
    }
    Ok(Dataset {
        name: format!("count_comparison_n{n}_seed{seed}"),
        examples,
        space: LabelSpace::Categorical { num_classes: 2 },
        label_names: None,
        checksum: None,
    })
}

const ORDER_VOCAB: &[&str] = &[
    "alder", "birch", "cedar", "dogwood", "elm", "fir", "ginkgo", "hazel", "ivy", "juniper",
    "katsura", "larch", "maple", "nutmeg", "oak", "pine", "quince", "rowan", "spruce", "teak",
    "ulmus", "viburnum", "willow", "xylosma", "yew", "zelkova",
];

/// Word-order task: the label says whether the first token lexicographically
/// precedes the last token. Solvable with boundary-aware features, at chance
/// for a pure bag of tokens.
pub fn gen_order_task(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from(&[seed, ORDER_TAG]);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let target = i % 2 == 1;
        let (first, last) = loop {
            let first = *ORDER_VOCAB.choose(&mut rng).unwrap();
            let last = *ORDER_VOCAB.choose(&mut rng).unwrap();
            if first != last && (first < last) == target {
                break (first, last);
            }
        };
        let len = rng.random_range(5..=12);
        let mut tokens = vec![first.to_string()];
        for _ in 0..len - 2 {
            tokens.push(ORDER_VOCAB.choose(&mut rng).unwrap().to_string());
        }
        tokens.push(last.to_string());
        examples.push(Example::new(tokens, Label::Class(target as usize)));
    }
    Ok(Dataset {
        name: format!("order_task_n{n}_seed{seed}"),
        examples,
        space: LabelSpace::Categorical { num_classes: 2 },
        label_names: None,
        checksum: None,
    })
}

fn insert_at_random_positions(tokens: &mut Vec<String>, extra: Vec<String>, rng: &mut ChaCha8Rng) {
    for tok in extra {
        let pos = rng.random_range(0..=tokens.len());
        tokens.insert(pos, tok);
    }
}

/// Wordlist-bias task: positive examples contain tokens from `list_a`,
/// negative ones never do, so the label is readable off list-a presence.
/// `list_b` tokens are inserted with the same frequency and redundancy but
/// independently of the label, serving as matched distractors. Signal tokens
/// appear with redundancy 3 so that masking a few random positions rarely
/// destroys the label signal.
pub fn gen_wordlist_bias_task(
    n: usize,
    list_a: &[String],
    list_b: &[String],
    seed: u64,
) -> Result<Dataset> {
    if list_a.is_empty() || list_b.is_empty() {
        return Err(Error::Config("wordlist-bias task needs non-empty word lists".into()));
    }
    if list_a.iter().any(|w| list_b.contains(w)) {
        return Err(Error::Config("wordlist-bias task lists must be disjoint".into()));
    }
    const REDUNDANCY: usize = 3;
    const FILLER_LEN: usize = 40;
    const FILLER_VOCAB: usize = 100;
    let mut rng = rng_from(&[seed, BIAS_TAG]);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let target = i % 2 == 1;
        let mut tokens: Vec<String> = (0..FILLER_LEN)
            .map(|_| format!("f{}", rng.random_range(0..FILLER_VOCAB)))
            .collect();
        if target {
            let signal: Vec<String> = (0..REDUNDANCY)
                .map(|_| list_a.choose(&mut rng).unwrap().clone())
                .collect();
            insert_at_random_positions(&mut tokens, signal, &mut rng);
        }
        // Frequency-matched, label-independent list-b insertions.
        if rng.random_bool(0.5) {
            let noise: Vec<String> = (0..REDUNDANCY)
                .map(|_| list_b.choose(&mut rng).unwrap().clone())
                .collect();
            insert_at_random_positions(&mut tokens, noise, &mut rng);
        }
        examples.push(Example::new(tokens, Label::Class(target as usize)));
    }
    Ok(Dataset {
        name: format!("wordlist_bias_n{n}_seed{seed}"),
        examples,
        space: LabelSpace::Categorical { num_classes: 2 },
        label_names: None,
        checksum: None,
    })
}

/// Bounded-regression task: every example has 20 tokens, `k` of which are the
/// token `A`; the label is the fraction of `A` tokens scaled to [0, 5].
pub fn gen_fraction_regression(n: usize, seed: u64) -> Result<Dataset> {
    const LEN: usize = 20;
    let mut rng = rng_from(&[seed, FRAC_TAG]);
    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(0..=LEN);
        let mut tokens: Vec<String> = Vec::with_capacity(LEN);
        tokens.extend(std::iter::repeat_n("A".to_string(), k));
        for _ in 0..LEN - k {
            tokens.push(format!("w{}", rng.random_range(0..10)));
        }
        tokens.shuffle(&mut rng);
        let label = 5.0 * k as f64 / LEN as f64;
        examples.push(Example::new(tokens, Label::Value(label)));
    }
    Ok(Dataset {
        name: format!("fraction_regression_n{n}_seed{seed}"),
        examples,
        space: LabelSpace::BoundedContinuous { lo: 0.0, hi: 5.0 },
        label_names: None,
        checksum: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior_of(ds: &Dataset) -> f64 {
        let ones = ds
            .examples
            .iter()
            .filter(|e| e.label == Label::Class(1))
            .count();
        ones as f64 / ds.len() as f64
    }

    #[test]
    fn count_comparison_oracle_matches_counts() {
        let ds = gen_count_comparison(200, 20, 9, 0).unwrap();
        for ex in &ds.examples {
            let oracle = &ex.aux["oracle"];
            let c1: usize = oracle[0].strip_prefix("c1=").unwrap().parse().unwrap();
            let c2: usize = oracle[1].strip_prefix("c2=").unwrap().parse().unwrap();
            assert_ne!(c1, c2, "ties are never emitted");
            assert_eq!(ex.label, Label::Class((c1 > c2) as usize));
            assert_eq!(ex.tokens.iter().filter(|t| t.starts_with('a')).count(), c1);
            assert_eq!(ex.tokens.iter().filter(|t| t.starts_with('b')).count(), c2);
        }
    }

    #[test]
    fn generators_are_deterministic_and_seed_sensitive() {
        assert_eq!(gen_count_comparison(100, 20, 9, 5).unwrap(), gen_count_comparison(100, 20, 9, 5).unwrap());
        assert_ne!(
            gen_count_comparison(100, 20, 9, 5).unwrap().examples,
            gen_count_comparison(100, 20, 9, 6).unwrap().examples
        );
        assert_eq!(gen_order_task(100, 5).unwrap(), gen_order_task(100, 5).unwrap());
        let a = vec!["he".to_string(), "him".to_string()];
        let b = vec!["she".to_string(), "her".to_string()];
        assert_eq!(
            gen_wordlist_bias_task(100, &a, &b, 5).unwrap(),
            gen_wordlist_bias_task(100, &a, &b, 5).unwrap()
        );
        assert_eq!(gen_fraction_regression(100, 5).unwrap(), gen_fraction_regression(100, 5).unwrap());
    }

    #[test]
    fn label_priors_balanced() {
        let ds = gen_count_comparison(1000, 20, 9, 1).unwrap();
        assert!((prior_of(&ds) - 0.5).abs() < 0.02);
        let ds = gen_order_task(1000, 1).unwrap();
        assert!((prior_of(&ds) - 0.5).abs() < 0.02);
    }

    #[test]
    fn order_task_labels_follow_rule() {
        let ds = gen_order_task(300, 2).unwrap();
        for ex in &ds.examples {
            let first = ex.tokens.first().unwrap();
            let last = ex.tokens.last().unwrap();
            assert_eq!(ex.label, Label::Class((first < last) as usize));
        }
    }

    #[test]
    fn bias_task_signal_presence_matches_label() {
        let a = vec!["alpha".to_string(), "apex".to_string()];
        let b = vec!["beta".to_string(), "bloom".to_string()];
        let ds = gen_wordlist_bias_task(400, &a, &b, 3).unwrap();
        for ex in &ds.examples {
            let has_a = ex.tokens.iter().any(|t| a.contains(t));
            assert_eq!(ex.label, Label::Class(has_a as usize));
        }
        // list-b frequency is label-independent: appears in roughly half of
        // each class.
        let with_b = |label: Label| {
            let of_class: Vec<_> = ds.examples.iter().filter(|e| e.label == label).collect();
            let n_b = of_class
                .iter()
                .filter(|e| e.tokens.iter().any(|t| b.contains(t)))
                .count();
            n_b as f64 / of_class.len() as f64
        };
        assert!((with_b(Label::Class(0)) - 0.5).abs() < 0.15);
        assert!((with_b(Label::Class(1)) - 0.5).abs() < 0.15);
    }

    #[test]
    fn overlapping_bias_lists_rejected() {
        let a = vec!["x".to_string()];
        let b = vec!["x".to_string(), "y".to_string()];
        assert!(matches!(gen_wordlist_bias_task(100, &a, &b, 0), Err(Error::Config(_))));
    }

    #[test]
    fn fraction_regression_labels_in_range() {
        let ds = gen_fraction_regression(200, 0).unwrap();
        for ex in &ds.examples {
            let Label::Value(v) = ex.label else { panic!("expected continuous label") };
            assert!((0.0..=5.0).contains(&v));
            let k = ex.tokens.iter().filter(|t| *t == "A").count();
            assert!((v - 5.0 * k as f64 / 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_or_degenerate_configs_rejected() {
        assert!(gen_count_comparison(50, 20, 9, 0).is_err());
        assert!(gen_count_comparison(100, 20, 0, 0).is_err());
    }
}
