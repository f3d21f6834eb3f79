use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::engine::{checkpoint_steps, embed_all, run, BatchLoss, Metrics};
use super::trace::TrainingTrace;
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::models::{contrastive_model_loss_graph, predict_pairs_graph, BoundModel, ModelKind, ModelState};
use crate::rng::{stream, Rng};
use crate::stimuli::{OddballTrial, TRIAL_SIZE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddballTrainConfig {
    pub train: TrainConfig,
    /// NT-Xent temperature (contrastive arm only).
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Fractions of training at which checkpoints are kept.
    #[serde(default = "default_fractions")]
    pub checkpoint_fractions: Vec<f64>,
    /// Training trials whose loss is reported at each eval point.
    #[serde(default = "default_probe")]
    pub probe_trials: usize,
}

fn default_temperature() -> f64 {
    0.5
}

fn default_fractions() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_probe() -> usize {
    256
}

/// Training trials and the evaluation trials used for task accuracy.
#[derive(Clone, Debug)]
pub struct OddballData {
    pub train: Vec<OddballTrial>,
    pub eval: Vec<OddballTrial>,
}

fn variant_pair(trial: &OddballTrial, rng: &mut Rng) -> (usize, usize) {
    let variants: Vec<usize> = trial.variant_positions().collect();
    let i = rng.gen_range(0..variants.len());
    let mut j = rng.gen_range(0..variants.len() - 1);
    if j >= i {
        j += 1;
    }
    (variants[i], variants[j])
}

fn one_variant(trial: &OddballTrial, rng: &mut Rng) -> usize {
    let variants: Vec<usize> = trial.variant_positions().collect();
    variants[rng.gen_range(0..variants.len())]
}

fn pixels<'a>(trials: &'a [OddballTrial], picks: &[(usize, usize)]) -> Result<Tensor> {
    let rows: Vec<&'a [f64]> = picks.iter().map(|&(t, p)| trials[t].images[p].pixels.as_slice()).collect();
    Tensor::from_rows(&rows)
}

/// Relational pairs per trial, all between reference renders: two views of
/// the trial's own shape (target 1) and one view against a view from the
/// next trial in the batch (1 if the category matches, else 0). Oddball
/// shapes never enter training.
fn relational_loss(g: &mut Graph, model: &BoundModel, trials: &[OddballTrial], batch: &[usize], rng: &mut Rng) -> Result<Var> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut target = Vec::new();
    for (k, &t) in batch.iter().enumerate() {
        let trial = &trials[t];
        let (i, j) = variant_pair(trial, rng);
        left.push((t, i));
        right.push((t, j));
        target.push(1.0);
        let u = batch[(k + 1) % batch.len()];
        left.push((t, one_variant(trial, rng)));
        right.push((u, one_variant(&trials[u], rng)));
        target.push(if trials[u].category_index == trial.category_index { 1.0 } else { 0.0 });
    }
    let xa = g.constant(pixels(trials, &left)?);
    let xb = g.constant(pixels(trials, &right)?);
    let t = g.constant(Tensor::new(vec![target.len(), 1], target)?);
    let s = predict_pairs_graph(g, model, xa, xb)?;
    let d = g.sub(s, t)?;
    let d = g.square(d)?;
    g.mean(d)
}

/// NT-Xent with each trial's reference shape as one item and two of its
/// reference renders as the two views.
fn contrastive_loss_for(
    g: &mut Graph,
    model: &BoundModel,
    trials: &[OddballTrial],
    batch: &[usize],
    rng: &mut Rng,
    temperature: f64,
) -> Result<Var> {
    let views: Vec<(usize, usize)> = batch.iter().map(|&t| variant_pair(&trials[t], rng)).collect();
    let mut picks: Vec<(usize, usize)> = batch.iter().zip(&views).map(|(&t, v)| (t, v.0)).collect();
    picks.extend(batch.iter().zip(&views).map(|(&t, v)| (t, v.1)));
    let x = g.constant(pixels(trials, &picks)?);
    contrastive_model_loss_graph(g, model, x, temperature)
}

/// Encoder embeddings of every image of every trial, `[trials * 6, dim]`
/// in trial-major order.
pub fn trial_embeddings(state: &ModelState, trials: &[OddballTrial]) -> Result<Tensor> {
    let inputs: Vec<Vec<f64>> = trials
        .iter()
        .flat_map(|t| t.images.iter().map(|im| im.pixels.clone()))
        .collect();
    embed_all(state, &inputs)
}

/// Share of trials where the centroid rule finds the oddball.
pub fn oddball_accuracy(state: &ModelState, trials: &[OddballTrial]) -> Result<f64> {
    if trials.is_empty() {
        return Ok(f64::NAN);
    }
    let emb = trial_embeddings(state, trials)?;
    let hits = trials
        .iter()
        .enumerate()
        .filter(|(k, t)| {
            let rows: Vec<&[f64]> = (0..TRIAL_SIZE).map(|p| emb.row(k * TRIAL_SIZE + p)).collect();
            crate::analysis::oddball_pick(&rows).ok() == Some(t.oddball_index)
        })
        .count();
    Ok(hits as f64 / trials.len() as f64)
}

/// Train one arm (relational or contrastive) on oddball stimuli.
///
/// Eval points report the loss on a fixed probe of training trials and the
/// centroid-rule accuracy on the evaluation trials (`id_metric`).
/// Checkpoints are kept at the configured fractions of training.
pub fn train_oddball_encoders(cfg: &OddballTrainConfig, data: &OddballData) -> Result<TrainingTrace> {
    let kind = cfg.train.model.kind;
    if !matches!(kind, ModelKind::Relational | ModelKind::Contrastive) {
        return Err(Error::Validation("oddball training needs a relational or contrastive model".into()));
    }
    if kind == ModelKind::Contrastive && !(cfg.temperature > 0.0) {
        return Err(Error::Validation(format!("temperature must be positive, got {}", cfg.temperature)));
    }
    if cfg.checkpoint_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::Validation("checkpoint fractions must lie in (0, 1]".into()));
    }
    let trials = &data.train;
    let loss_for = |g: &mut Graph, model: &BoundModel, batch: &[usize], rng: &mut Rng| match kind {
        ModelKind::Contrastive => contrastive_loss_for(g, model, trials, batch, rng, cfg.temperature),
        _ => relational_loss(g, model, trials, batch, rng),
    };
    let probe: Vec<usize> = (0..cfg.probe_trials.min(trials.len())).collect();
    let probe_batch = cfg.train.batch_size.max(if kind == ModelKind::Contrastive { 2 } else { 1 });
    let total = cfg.train.total_steps(trials.len());
    run(
        kind.as_str(),
        &cfg.train,
        trials.len(),
        &checkpoint_steps(&cfg.checkpoint_fractions, total),
        |g, model, batch, rng| {
            let loss = loss_for(g, model, batch, rng)?;
            Ok(BatchLoss { loss, heldout: 0 })
        },
        |state| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (c, chunk) in probe.chunks(probe_batch).enumerate() {
                if kind == ModelKind::Contrastive && chunk.len() < 2 {
                    continue;
                }
                let mut g = Graph::new();
                let model = state.bind_frozen(&mut g);
                let mut rng = stream(cfg.train.seed, "train/probe", c as u64);
                let l = loss_for(&mut g, &model, chunk, &mut rng)?;
                sum += g.value(l).item().unwrap_or(f64::NAN) * chunk.len() as f64;
                count += chunk.len();
            }
            Ok(Metrics {
                train_loss: if count == 0 { f64::NAN } else { sum / count as f64 },
                id_metric: Some(oddball_accuracy(state, &data.eval)?),
                ood_metric: None,
            })
        },
    )
}
