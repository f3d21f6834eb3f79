//! Two-feature categorical stimuli with one-hot encodings.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::pairs::Split;
use crate::error::{Error, Result};
use crate::rng::{permutation, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoricalStimulus {
    pub feature_a: usize,
    pub feature_b: usize,
}

impl CategoricalStimulus {
    /// Concatenated one-hots: ones at `feature_a` and `n_values + feature_b`.
    pub fn encoding(&self, n_values: usize) -> Vec<f64> {
        let mut e = vec![0.0; 2 * n_values];
        e[self.feature_a] = 1.0;
        e[n_values + self.feature_b] = 1.0;
        e
    }

    pub fn shared_features(&self, other: &CategoricalStimulus) -> usize {
        usize::from(self.feature_a == other.feature_a) + usize::from(self.feature_b == other.feature_b)
    }
}

/// 1 when both features match, 0.5 when exactly one does, 0 otherwise.
pub fn categorical_target(a: &CategoricalStimulus, b: &CategoricalStimulus) -> f64 {
    a.shared_features(b) as f64 / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CategoricalPair {
    pub a: usize,
    pub b: usize,
    pub target: f64,
    pub split: Split,
}

#[derive(Clone, Debug)]
pub struct CategoricalDataset {
    pub n_values: usize,
    /// Every stimulus; index = `feature_a * n_values + feature_b`.
    pub stimuli: Vec<CategoricalStimulus>,
    pub train_ids: Vec<usize>,
    pub holdout_ids: Vec<usize>,
    /// Every unordered pair of training stimuli, self-pairs included.
    pub train_pairs: Vec<CategoricalPair>,
    /// Per holdout stimulus: its self-pair, one partner sharing exactly one
    /// feature and one sharing none, all drawn from the holdout set.
    pub holdout_pairs: Vec<CategoricalPair>,
}

impl CategoricalDataset {
    pub fn encoding(&self, id: usize) -> Vec<f64> {
        self.stimuli[id].encoding(self.n_values)
    }

    pub fn split_of(&self, id: usize) -> Split {
        if self.train_ids.binary_search(&id).is_ok() {
            Split::Train
        } else {
            Split::Test
        }
    }
}

pub fn build_onehot_dataset(n_values: usize, n_train: usize, seed: u64) -> Result<CategoricalDataset> {
    if n_values < 2 {
        return Err(Error::Validation(format!("n_values must be >= 2, got {n_values}")));
    }
    let total = n_values * n_values;
    if n_train == 0 || n_train > total {
        return Err(Error::Validation(format!(
            "n_train must lie in [1, {}] for {n_values} values, got {n_train}",
            total
        )));
    }
    let stimuli: Vec<CategoricalStimulus> = (0..total)
        .map(|i| CategoricalStimulus {
            feature_a: i / n_values,
            feature_b: i % n_values,
        })
        .collect();
    let order = permutation(total, &mut stream(seed, "onehot/split", 0));
    let mut train_ids = order[..n_train].to_vec();
    train_ids.sort_unstable();
    let mut holdout_ids = order[n_train..].to_vec();
    holdout_ids.sort_unstable();

    let pair = |a: usize, b: usize, split: Split| CategoricalPair {
        a,
        b,
        target: categorical_target(&stimuli[a], &stimuli[b]),
        split,
    };
    let mut train_pairs = Vec::new();
    for (x, &a) in train_ids.iter().enumerate() {
        for &b in &train_ids[x..] {
            train_pairs.push(pair(a, b, Split::Train));
        }
    }

    let is_holdout = |id: usize| holdout_ids.binary_search(&id).is_ok();
    let mut rng = stream(seed, "onehot/holdout-pairs", 0);
    let mut holdout_pairs = Vec::with_capacity(3 * holdout_ids.len());
    for &a in &holdout_ids {
        let s = stimuli[a];
        holdout_pairs.push(pair(a, a, Split::Test));
        let one: Vec<usize> = (0..n_values)
            .filter(|&v| v != s.feature_b)
            .map(|v| s.feature_a * n_values + v)
            .chain((0..n_values).filter(|&v| v != s.feature_a).map(|v| v * n_values + s.feature_b))
            .filter(|&id| is_holdout(id))
            .collect();
        if !one.is_empty() {
            holdout_pairs.push(pair(a, one[rng.gen_range(0..one.len())], Split::Test));
        }
        let none: Vec<usize> = holdout_ids
            .iter()
            .copied()
            .filter(|&b| stimuli[b].shared_features(&s) == 0)
            .collect();
        if !none.is_empty() {
            holdout_pairs.push(pair(a, none[rng.gen_range(0..none.len())], Split::Test));
        }
    }
    Ok(CategoricalDataset {
        n_values,
        stimuli,
        train_ids,
        holdout_ids,
        train_pairs,
        holdout_pairs,
    })
}
