use super::config::TrainConfig;
use super::engine::{embed_all, gather, pair_predictions, run, BatchLoss, Metrics};
use super::trace::TrainingTrace;
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::models::{predict_pairs_graph, ModelKind, ModelState};
use crate::stimuli::{Pair, PairDataset, Split};

/// Mean squared error of the model on `pairs`, given embeddings of every
/// stimulus.
pub fn pair_mse(state: &ModelState, embeddings: &Tensor, pairs: &[Pair]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(f64::NAN);
    }
    let idx: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let pred = pair_predictions(state, embeddings, &idx)?;
    let sse: f64 = pred.iter().zip(pairs).map(|(s, p)| (s - p.target).powi(2)).sum();
    Ok(sse / pairs.len() as f64)
}

/// Fit a relational or feedforward model to the training pairs by MSE.
///
/// Eval points report full-training-set MSE, in-distribution test MSE
/// (`id_metric`) and OOD MSE (`ood_metric`).
pub fn train_similarity(cfg: &TrainConfig, data: &PairDataset) -> Result<TrainingTrace> {
    if !matches!(cfg.model.kind, ModelKind::Relational | ModelKind::Feedforward) {
        return Err(Error::Validation("similarity training needs a relational or feedforward model".into()));
    }
    let inputs: Vec<Vec<f64>> = data.stimuli.iter().map(|s| s.image.pixels.clone()).collect();
    let train = &data.train;
    run(
        cfg.model.kind.as_str(),
        cfg,
        train.len(),
        &[],
        |g: &mut Graph, model, batch, _rng| {
            let pairs: Vec<&Pair> = batch.iter().map(|&i| &train[i]).collect();
            let heldout = pairs.iter().filter(|p| p.split != Split::Train).count() as u64;
            let xa = g.constant(gather(&inputs, pairs.iter().map(|p| p.a))?);
            let xb = g.constant(gather(&inputs, pairs.iter().map(|p| p.b))?);
            let t = g.constant(Tensor::new(vec![pairs.len(), 1], pairs.iter().map(|p| p.target).collect())?);
            let s = predict_pairs_graph(g, model, xa, xb)?;
            let d = g.sub(s, t)?;
            let d = g.square(d)?;
            let loss = g.mean(d)?;
            Ok(BatchLoss { loss, heldout })
        },
        |state| {
            let emb = embed_all(state, &inputs)?;
            Ok(Metrics {
                train_loss: pair_mse(state, &emb, &data.train)?,
                id_metric: Some(pair_mse(state, &emb, &data.test)?),
                ood_metric: Some(pair_mse(state, &emb, &data.ood)?),
            })
        },
    )
}
