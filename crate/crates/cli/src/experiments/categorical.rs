use relnet_core::stimuli::build_onehot_dataset;
use relnet_core::training::{train_categorical, CategoricalTargets, TrainConfig};
use serde::{Deserialize, Serialize};

use super::{arm_seed, median, stimuli_seed, RunEnv};
use crate::config::CategoricalConfig;
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalRun {
    pub arm: String,
    pub replicate: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
    /// First eval step with every training pair answered correctly.
    pub perfect_train_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalAggregate {
    pub arm: String,
    pub mean_train_accuracy: f64,
    pub mean_holdout_accuracy: f64,
    pub median_holdout_accuracy: f64,
    pub min_holdout_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSummary {
    pub targets: CategoricalTargets,
    pub train_pairs: usize,
    pub holdout_pairs: usize,
    pub runs: Vec<CategoricalRun>,
    pub aggregates: Vec<CategoricalAggregate>,
}

impl CategoricalSummary {
    pub fn aggregate(&self, arm: &str) -> Option<&CategoricalAggregate> {
        self.aggregates.iter().find(|a| a.arm == arm)
    }
}

pub fn run(cfg: &CategoricalConfig, env: &mut RunEnv) -> Result<(CategoricalSummary, Vec<String>)> {
    let mut runs = Vec::new();
    let (mut train_pairs, mut holdout_pairs) = (0, 0);
    for r in 0..cfg.train.replicates {
        let data = build_onehot_dataset(cfg.stimuli.n_values, cfg.stimuli.n_train, stimuli_seed(cfg.master_seed, r))?;
        train_pairs = data.train_pairs.len();
        holdout_pairs = data.holdout_pairs.len();
        let input_dim = 2 * cfg.stimuli.n_values;
        for &arm in &cfg.arms {
            let seed = arm_seed(cfg.master_seed, arm, r);
            let tc = TrainConfig {
                model: cfg.model.spec(arm, input_dim),
                epochs: cfg.train.epochs,
                batch_size: cfg.train.batch_size,
                eval_interval: cfg.train.eval_interval,
                seed,
                optimizer: cfg.train.optimizer,
            };
            let t0 = std::time::Instant::now();
            let out = train_categorical(&tc, &data, cfg.train.targets).map_err(|e| HarnessError::training(arm.as_str(), e))?;
            env.log(format!(
                "[{} r{r}] train {:.3} holdout {:.3} ({:.1}s)",
                arm.as_str(),
                out.train_accuracy,
                out.holdout_accuracy,
                t0.elapsed().as_secs_f64()
            ));
            env.record_arm(arm, r, seed, &format!("{}/r{r}", arm.as_str()), &out.trace, &[])?;
            runs.push(CategoricalRun {
                arm: arm.as_str().to_string(),
                replicate: r,
                seed,
                train_accuracy: out.train_accuracy,
                holdout_accuracy: out.holdout_accuracy,
                perfect_train_step: out.trace.first_step_where(|e| e.id_metric == Some(1.0)),
            });
        }
    }
    let aggregates = cfg
        .arms
        .iter()
        .map(|arm| {
            let mine: Vec<&CategoricalRun> = runs.iter().filter(|r| r.arm == arm.as_str()).collect();
            let n = mine.len() as f64;
            let mut holdout: Vec<f64> = mine.iter().map(|r| r.holdout_accuracy).collect();
            CategoricalAggregate {
                arm: arm.as_str().to_string(),
                mean_train_accuracy: mine.iter().map(|r| r.train_accuracy).sum::<f64>() / n,
                mean_holdout_accuracy: holdout.iter().sum::<f64>() / n,
                min_holdout_accuracy: holdout.iter().copied().fold(f64::INFINITY, f64::min),
                median_holdout_accuracy: median(&mut holdout).unwrap_or(f64::NAN),
            }
        })
        .collect();
    let mut notes = Vec::new();
    if cfg.train.targets == CategoricalTargets::SameDifferent {
        notes.push("networks are fit to the binarized same/different answer; pairs sharing one feature count as different".to_string());
    }
    Ok((
        CategoricalSummary {
            targets: cfg.train.targets,
            train_pairs,
            holdout_pairs,
            runs,
            aggregates,
        },
        notes,
    ))
}
