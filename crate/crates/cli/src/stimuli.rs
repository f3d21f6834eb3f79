use std::path::{Path, PathBuf};

use relnet_core::stimuli::{
    build_onehot_dataset, build_quadrilateral_catalog, build_similarity_pairs, build_trial_set, export_categorical,
    export_pair_dataset, export_trials,
};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiments::stimuli_seed;

/// Export the stimuli of replicate 0 of a config: exactly the images and
/// tables a run would train and evaluate on. Oddball configs export the
/// evaluation trials.
pub fn generate_stimuli(config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let seed = stimuli_seed(config.master_seed(), 0);
    let files = match config {
        ExperimentConfig::ParametricSimilarity(c) => export_pair_dataset(&build_similarity_pairs(&c.stimuli, seed)?, dir)?,
        ExperimentConfig::Oddball(c) => {
            let catalog = build_quadrilateral_catalog();
            let n = c.stimuli.eval_trials_per_category * catalog.len();
            export_trials(&build_trial_set(&catalog, n, &c.stimuli.trial_config(), seed, "eval")?, dir)?
        }
        ExperimentConfig::Categorical(c) => {
            export_categorical(&build_onehot_dataset(c.stimuli.n_values, c.stimuli.n_train, seed)?, dir)?
        }
    };
    Ok(files)
}
