//! Log-uniformly spaced block cut points for block-wise prequential coding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NUM_BLOCKS: usize = 9;
pub const DEFAULT_FIRST_CUT: usize = 64;

/// The cut points `t_0 < t_1 < ... < t_S` partitioning the example order.
/// `cuts` always has `num_blocks + 1` entries, starting at 0 and ending at
/// the dataset size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub cuts: Vec<usize>,
    /// Set when the dataset was too small for the requested schedule and we
    /// fell back to two half-size blocks.
    pub fallback: bool,
}

impl BlockSchedule {
    pub fn num_blocks(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn dataset_size(&self) -> usize {
        *self.cuts.last().unwrap()
    }

    /// Block `s` covers examples `[cuts[s], cuts[s+1])`.
    pub fn block_range(&self, s: usize) -> std::ops::Range<usize> {
        self.cuts[s]..self.cuts[s + 1]
    }

    /// One block per example: cuts `[0, 1, 2, ..., n]`. This makes the
    /// block-wise code coincide with the pure online code.
    pub fn unit(n: usize) -> BlockSchedule {
        BlockSchedule { cuts: (0..=n).collect(), fallback: false }
    }
}

/// Raw (real-valued, rounded) cuts before the monotonicity bump. Exposed for
/// the spacing-ratio property test.
pub(crate) fn raw_cuts(n: usize, num_blocks: usize, first_cut: usize) -> Vec<usize> {
    let ratio = (n as f64 / first_cut as f64).powf(1.0 / (num_blocks as f64 - 1.0));
    let mut cuts = Vec::with_capacity(num_blocks + 1);
    cuts.push(0);
    for k in 0..num_blocks {
        cuts.push((first_cut as f64 * ratio.powi(k as i32)).round() as usize);
    }
    cuts
}

/// Build the schedule `[0, t1, t1*r, t1*r^2, ..., n]` with constant ratio
/// `r = (n/t1)^(1/(S-1))`, rounding to nearest integers and bumping any
/// duplicate cut up by one so blocks are never empty.
pub fn make_schedule(n: usize, num_blocks: usize, first_cut: usize) -> Result<BlockSchedule> {
    if num_blocks < 2 {
        return Err(Error::Config(format!(
            "schedule needs at least 2 blocks, got {num_blocks}"
        )));
    }
    if n < num_blocks {
        return Err(Error::Config(format!(
            "schedule infeasible: {n} examples cannot fill {num_blocks} blocks"
        )));
    }
    if n <= first_cut {
        return Err(Error::Config(format!(
            "dataset size {n} must exceed the first cut {first_cut}; reduce num_blocks ({num_blocks}) or first_cut ({first_cut})"
        )));
    }
    if n < 2 * first_cut {
        // Too small for the requested spacing; two half-size blocks instead.
        return Ok(BlockSchedule { cuts: vec![0, n.div_ceil(2), n], fallback: true });
    }

    let mut cuts = raw_cuts(n, num_blocks, first_cut);
    for i in 1..cuts.len() {
        if cuts[i] <= cuts[i - 1] {
            cuts[i] = cuts[i - 1] + 1;
        }
    }
    *cuts.last_mut().unwrap() = n;
    debug_assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    Ok(BlockSchedule { cuts, fallback: false })
}
