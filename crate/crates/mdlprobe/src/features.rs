//! Hashed bag-of-tokens feature extraction.
//!
//! Tokens are hashed straight into a fixed-dimension count vector; collisions
//! are accepted in exchange for memory-bounded determinism (no feature
//! dictionary to grow). The mask placeholder `_` is dropped before
//! extraction: a masked position contributes no signal.

use serde::{Deserialize, Serialize};

use crate::transforms::MASK_TOKEN;

pub const DEFAULT_HASH_DIM: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Dimension of the hashed feature space.
    pub hash_dim: usize,
    /// Highest n-gram order to extract (1 = unigrams, 2 = unigrams+bigrams).
    pub ngram: usize,
    /// Emit dedicated `first=<tok>` / `last=<tok>` features so a linear model
    /// can see sequence boundaries. Off by default: without it the features
    /// are a pure bag and invariant to token order.
    pub mark_boundaries: bool,
    /// Clamp feature values to presence (0/1) instead of counts.
    pub binary: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { hash_dim: DEFAULT_HASH_DIM, ngram: 2, mark_boundaries: false, binary: false }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn bucket(cfg: &FeatureConfig, parts: &[&str]) -> u32 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        h ^= fnv1a(p.as_bytes());
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h % cfg.hash_dim as u64) as u32
}

/// Sparse feature vector: sorted `(index, value)` pairs with unique indices.
pub type SparseFeatures = Vec<(u32, f64)>;

pub fn extract(tokens: &[String], cfg: &FeatureConfig) -> SparseFeatures {
    let visible: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| *t != MASK_TOKEN)
        .collect();

    let mut raw: Vec<u32> = Vec::with_capacity(visible.len() * cfg.ngram + 2);
    for t in &visible {
        raw.push(bucket(cfg, &["u", t]));
    }
    if cfg.ngram >= 2 {
        for w in visible.windows(2) {
            raw.push(bucket(cfg, &["b", w[0], w[1]]));
        }
    }
    if cfg.mark_boundaries {
        if let Some(first) = visible.first() {
            raw.push(bucket(cfg, &["first", first]));
        }
        if let Some(last) = visible.last() {
            raw.push(bucket(cfg, &["last", last]));
        }
    }

    raw.sort_unstable();
    let mut out: SparseFeatures = Vec::with_capacity(raw.len());
    for idx in raw {
        match out.last_mut() {
            Some((i, v)) if *i == idx => *v += 1.0,
            _ => out.push((idx, 1.0)),
        }
    }
    if cfg.binary {
        for (_, v) in &mut out {
            *v = 1.0;
        }
    }
    out
}
