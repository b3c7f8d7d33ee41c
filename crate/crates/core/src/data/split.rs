//! Per-class random train/test splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DsvmError, Result};
use crate::trainer::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub large_class_threshold: usize,
    pub large_fraction: f64,
    pub small_fraction: f64,
    pub min_class_size: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            large_class_threshold: 40,
            large_fraction: 0.8,
            small_fraction: 0.5,
            min_class_size: 10,
            rounds: 10,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("large_fraction", self.large_fraction),
            ("small_fraction", self.small_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DsvmError::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {f}"
                )));
            }
        }
        if self.rounds == 0 {
            return Err(DsvmError::InvalidParameter("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Training count for a class of `count` instances.
pub fn class_fraction_train_count(count: usize, spec: &SplitSpec) -> usize {
    let fraction = if count > spec.large_class_threshold {
        spec.large_fraction
    } else {
        spec.small_fraction
    };
    // keep at least one instance on each side
    ((fraction * count as f64).ceil() as usize).clamp(1, count - 1)
}

/// Returns sorted `(train, test)` index lists.
pub fn stratified_split(labels: &[i64], spec: &SplitSpec, round: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 0x5_9117, round as u64));
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, mut idx) in by_class {
        if idx.len() < 2 {
            return Err(DsvmError::InvalidLabels(format!(
                "class {class} has a single instance and cannot be split"
            )));
        }
        idx.shuffle(&mut rng);
        let k = class_fraction_train_count(idx.len(), spec);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
