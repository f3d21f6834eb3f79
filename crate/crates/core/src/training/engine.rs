use std::time::Instant;

use super::config::TrainConfig;
use super::trace::{EvalPoint, TrainingTrace};
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::models::{
    bottleneck_graph, encode, feedforward_similarity, init_parameters, optimizer_step, BoundModel, ModelKind, ModelState,
    OptimizerState,
};
use crate::rng::{derive_seed, permutation, stream, Rng};

/// Metrics of one evaluation, without the step.
pub(crate) struct Metrics {
    pub train_loss: f64,
    pub id_metric: Option<f64>,
    pub ood_metric: Option<f64>,
}

/// Loss graph for one mini-batch plus the number of held-out records it
/// touched.
pub(crate) struct BatchLoss {
    pub loss: Var,
    pub heldout: u64,
}

/// Shared optimization loop. `batch_loss` receives the item indices of the
/// batch and a per-step augmentation stream; `evaluate` sees the current
/// parameters at step 0, every `eval_interval` steps, and the last step.
pub(crate) fn run<L, E>(
    arm: &str,
    cfg: &TrainConfig,
    items: usize,
    checkpoint_steps: &[u64],
    mut batch_loss: L,
    mut evaluate: E,
) -> Result<TrainingTrace>
where
    L: FnMut(&mut Graph, &BoundModel, &[usize], &mut Rng) -> Result<BatchLoss>,
    E: FnMut(&ModelState) -> Result<Metrics>,
{
    cfg.validate(items)?;
    let mut state = init_parameters(&cfg.model, derive_seed(cfg.seed, "init", 0))?;
    let mut opt = OptimizerState::new(&state, cfg.optimizer);
    let total = cfg.total_steps(items) as u64;

    let eval_point = |step: u64, m: Metrics| EvalPoint {
        step,
        train_loss: m.train_loss,
        id_metric: m.id_metric,
        ood_metric: m.ood_metric,
    };
    let mut evals = vec![eval_point(0, evaluate(&state)?)];
    let mut step_losses = Vec::with_capacity(total as usize);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    let mut checkpoints = Vec::new();
    let mut heldout = 0;
    let mut step = 0u64;
    let mut last_finite: Option<(u64, f64)> = None;

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let order = permutation(items, &mut stream(cfg.seed, "train/batches", epoch as u64));
        for batch in order.chunks(cfg.batch_size) {
            step += 1;
            let diverged = || Error::Divergence {
                step,
                last_finite_step: last_finite.map(|l| l.0),
                last_finite_loss: last_finite.map(|l| l.1),
            };
            let mut rng = stream(cfg.seed, "train/augment", step);
            let mut g = Graph::new();
            let model = state.bind(&mut g);
            let out = match batch_loss(&mut g, &model, batch, &mut rng) {
                Err(Error::Domain { .. }) => return Err(diverged()),
                other => other?,
            };
            heldout += out.heldout;
            let loss = g
                .value(out.loss)
                .item()
                .ok_or_else(|| Error::structural("train", "loss is not a scalar"))?;
            if !loss.is_finite() {
                return Err(diverged());
            }
            let mut grads = g.backward(out.loss)?;
            let grads = model.gradients(&mut grads);
            if grads.iter().flatten().any(|t| !t.is_finite()) {
                return Err(diverged());
            }
            optimizer_step(&mut opt, &mut state, &grads)?;
            last_finite = Some((step, loss));
            step_losses.push(loss);
            if step % cfg.eval_interval as u64 == 0 || step == total {
                evals.push(eval_point(step, evaluate(&state)?));
            }
            if checkpoint_steps.contains(&step) {
                checkpoints.push(state.clone());
            }
        }
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }

    Ok(TrainingTrace {
        arm: arm.to_string(),
        step_losses,
        evals,
        epoch_seconds,
        heldout_gradient_touches: heldout,
        final_state: state,
        checkpoints,
    })
}

/// Optimizer steps at which each fraction of training is reached
/// (`round(f * total)`, at least 1).
pub fn checkpoint_steps(fractions: &[f64], total: usize) -> Vec<u64> {
    fractions
        .iter()
        .map(|f| ((f * total as f64).round() as u64).clamp(1, total as u64))
        .collect()
}

/// Stack the given flat inputs into a batch tensor.
pub(crate) fn gather(inputs: &[Vec<f64>], ids: impl IntoIterator<Item = usize>) -> Result<Tensor> {
    let rows: Vec<&[f64]> = ids.into_iter().map(|i| inputs[i].as_slice()).collect();
    Tensor::from_rows(&rows)
}

/// Embeddings of every input, encoded in chunks.
pub fn embed_all(state: &ModelState, inputs: &[Vec<f64>]) -> Result<Tensor> {
    const CHUNK: usize = 512;
    let dim = state.spec.encoder.embedding_dim;
    let mut data = Vec::with_capacity(inputs.len() * dim);
    for start in (0..inputs.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(inputs.len());
        let e = encode(state, &gather(inputs, start..end)?)?;
        data.extend_from_slice(e.data());
    }
    Tensor::new(vec![inputs.len(), dim], data)
}

/// Model similarity for index pairs into precomputed embeddings.
pub fn pair_predictions(state: &ModelState, embeddings: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let a = Tensor::from_rows(&pairs.iter().map(|p| embeddings.row(p.0)).collect::<Vec<_>>())?;
    let b = Tensor::from_rows(&pairs.iter().map(|p| embeddings.row(p.1)).collect::<Vec<_>>())?;
    match state.spec.kind {
        ModelKind::Feedforward => feedforward_similarity(state, &a, &b),
        ModelKind::Relational | ModelKind::Contrastive => {
            let mut g = Graph::new();
            let (va, vb) = (g.constant(a), g.constant(b));
            let s = bottleneck_graph(&mut g, va, vb, state.spec.metric)?;
            Ok(g.value(s).data().to_vec())
        }
    }
}
