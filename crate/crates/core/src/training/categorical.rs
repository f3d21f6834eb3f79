use super::config::TrainConfig;
use super::engine::{embed_all, gather, pair_predictions, run, BatchLoss, Metrics};
use super::trace::TrainingTrace;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::models::{predict_pairs_graph, ModelKind, ModelState};
use crate::stimuli::{CategoricalDataset, CategoricalPair, Split};

/// A prediction strictly above this counts as "same".
pub const SAME_THRESHOLD: f64 = 0.5;
/// Targets at or above this are "same" (only identical stimuli, target 1).
pub const SAME_TARGET: f64 = 0.75;

/// What the network is fit to. `Graded` uses the dataset's 1 / 0.5 / 0
/// similarity; `SameDifferent` fits the binarized answer (1 only for pairs at
/// or above [`SAME_TARGET`]). Accuracy is scored the same way for both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalTargets {
    Graded,
    #[default]
    SameDifferent,
}

impl CategoricalTargets {
    pub fn fit_target(&self, graded: f64) -> f64 {
        match self {
            CategoricalTargets::Graded => graded,
            CategoricalTargets::SameDifferent => {
                if graded >= SAME_TARGET {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CategoricalOutcome {
    pub trace: TrainingTrace,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
}

/// Fraction of pairs whose thresholded prediction matches the binarized
/// target.
pub fn categorical_accuracy(state: &ModelState, embeddings: &Tensor, pairs: &[CategoricalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(f64::NAN);
    }
    let idx: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let pred = pair_predictions(state, embeddings, &idx)?;
    let hits = pred
        .iter()
        .zip(pairs)
        .filter(|(s, p)| (**s > SAME_THRESHOLD) == (p.target >= SAME_TARGET))
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

fn mse(state: &ModelState, embeddings: &Tensor, pairs: &[CategoricalPair], targets: CategoricalTargets) -> Result<f64> {
    let idx: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let pred = pair_predictions(state, embeddings, &idx)?;
    Ok(pred
        .iter()
        .zip(pairs)
        .map(|(s, p)| (s - targets.fit_target(p.target)).powi(2))
        .sum::<f64>()
        / pairs.len() as f64)
}

/// Train on the one-hot training pairs by MSE. Eval points report training
/// MSE, training accuracy (`id_metric`) and holdout accuracy (`ood_metric`).
pub fn train_categorical(cfg: &TrainConfig, data: &CategoricalDataset, targets: CategoricalTargets) -> Result<CategoricalOutcome> {
    if !matches!(cfg.model.kind, ModelKind::Relational | ModelKind::Feedforward) {
        return Err(Error::Validation("categorical training needs a relational or feedforward model".into()));
    }
    let inputs: Vec<Vec<f64>> = (0..data.stimuli.len()).map(|i| data.encoding(i)).collect();
    let train = &data.train_pairs;
    let trace = run(
        cfg.model.kind.as_str(),
        cfg,
        train.len(),
        &[],
        |g: &mut Graph, model, batch, _rng| {
            let pairs: Vec<&CategoricalPair> = batch.iter().map(|&i| &train[i]).collect();
            let heldout = pairs
                .iter()
                .filter(|p| p.split != Split::Train || data.split_of(p.a) != Split::Train || data.split_of(p.b) != Split::Train)
                .count() as u64;
            let xa = g.constant(gather(&inputs, pairs.iter().map(|p| p.a))?);
            let xb = g.constant(gather(&inputs, pairs.iter().map(|p| p.b))?);
            let t = g.constant(Tensor::new(vec![pairs.len(), 1], pairs.iter().map(|p| targets.fit_target(p.target)).collect())?);
            let s = predict_pairs_graph(g, model, xa, xb)?;
            let d = g.sub(s, t)?;
            let d = g.square(d)?;
            let loss = g.mean(d)?;
            Ok(BatchLoss { loss, heldout })
        },
        |state| {
            let emb = embed_all(state, &inputs)?;
            Ok(Metrics {
                train_loss: mse(state, &emb, train, targets)?,
                id_metric: Some(categorical_accuracy(state, &emb, train)?),
                ood_metric: Some(categorical_accuracy(state, &emb, &data.holdout_pairs)?),
            })
        },
    )?;
    let last = trace.evals.last().expect("step 0 is always evaluated");
    let (train_accuracy, holdout_accuracy) = (last.id_metric.unwrap_or(f64::NAN), last.ood_metric.unwrap_or(f64::NAN));
    Ok(CategoricalOutcome {
        trace,
        train_accuracy,
        holdout_accuracy,
    })
}
