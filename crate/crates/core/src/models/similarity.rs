use super::spec::{BottleneckMetric, ModelKind};
use super::state::{encode_graph, mlp, BoundModel, ModelState};
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

const NORM_FLOOR: f64 = 1e-12;

/// Per-row similarity through the parameter-free bottleneck, `[batch, 1]`.
///
/// Euclidean: `exp(-|a - b|)`, so identical embeddings give exactly 1.
/// Euclidean-linear: `1 - |a - b|` (unbounded below).
pub fn bottleneck_graph(g: &mut Graph, a: Var, b: Var, metric: BottleneckMetric) -> Result<Var> {
    if g.value(a).shape() != g.value(b).shape() {
        return Err(Error::structural(
            "relational_similarity",
            format!("{:?} vs {:?}", g.value(a).shape(), g.value(b).shape()),
        ));
    }
    match metric {
        BottleneckMetric::Euclidean => {
            let d = g.sub(a, b)?;
            let d = g.square(d)?;
            let d = g.sum_axis(d, 1)?;
            let d = g.sqrt(d)?;
            let d = g.scale(d, -1.0)?;
            g.exp(d)
        }
        BottleneckMetric::EuclideanLinear => {
            let d = g.sub(a, b)?;
            let d = g.square(d)?;
            let d = g.sum_axis(d, 1)?;
            let d = g.sqrt(d)?;
            let d = g.scale(d, -1.0)?;
            let one = g.constant(Tensor::scalar(1.0));
            g.add(d, one)
        }
        BottleneckMetric::Cosine => {
            let an = row_normalize(g, a)?;
            let bn = row_normalize(g, b)?;
            let c = g.mul(an, bn)?;
            let c = g.sum_axis(c, 1)?;
            let half = g.constant(Tensor::scalar(0.5));
            let c = g.scale(c, 0.5)?;
            g.add(c, half)
        }
    }
}

/// Rows scaled to unit length (a tiny floor keeps zero rows finite).
pub fn row_normalize(g: &mut Graph, x: Var) -> Result<Var> {
    let sq = g.square(x)?;
    let s = g.sum_axis(sq, 1)?;
    let floor = g.constant(Tensor::scalar(NORM_FLOOR));
    let s = g.add(s, floor)?;
    let n = g.sqrt(s)?;
    let ln = g.log(n)?;
    let ln = g.scale(ln, -1.0)?;
    let inv = g.exp(ln)?;
    g.mul(x, inv)
}

/// Feedforward head on `[a | b]`, sigmoid output `[batch, 1]`.
pub fn feedforward_head_graph(g: &mut Graph, model: &BoundModel, a: Var, b: Var) -> Result<Var> {
    if model.head.is_empty() {
        return Err(Error::structural("feedforward_similarity", "model has no head"));
    }
    let ab = g.concat(&[a, b], 1)?;
    let z = mlp(g, &model.head, ab)?;
    g.sigmoid(z)
}

/// Predicted similarity for a batch of image pairs, `[batch, 1]`. Both
/// inputs go through the same encoder leaves.
pub fn predict_pairs_graph(g: &mut Graph, model: &BoundModel, xa: Var, xb: Var) -> Result<Var> {
    let ea = encode_graph(g, model, xa)?;
    let eb = encode_graph(g, model, xb)?;
    match model.kind {
        ModelKind::Relational | ModelKind::Contrastive => bottleneck_graph(g, ea, eb, model.metric),
        ModelKind::Feedforward => feedforward_head_graph(g, model, ea, eb),
    }
}

fn column(t: &Tensor) -> Vec<f64> {
    t.data().to_vec()
}

/// `exp(-|a_i - b_i|)` per row.
pub fn relational_similarity(emb_a: &Tensor, emb_b: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let a = g.constant(emb_a.clone());
    let b = g.constant(emb_b.clone());
    let s = bottleneck_graph(&mut g, a, b, BottleneckMetric::Euclidean)?;
    Ok(column(g.value(s)))
}

/// Head output per row; fails for models without a head.
pub fn feedforward_similarity(state: &ModelState, emb_a: &Tensor, emb_b: &Tensor) -> Result<Vec<f64>> {
    if state.spec.kind != ModelKind::Feedforward {
        return Err(Error::structural("feedforward_similarity", "model has no feedforward head"));
    }
    let mut g = Graph::new();
    let model = state.bind_frozen(&mut g);
    let a = g.constant(emb_a.clone());
    let b = g.constant(emb_b.clone());
    let s = feedforward_head_graph(&mut g, &model, a, b)?;
    Ok(column(g.value(s)))
}

/// Model prediction for image pairs (no gradients).
pub fn predict_pairs(state: &ModelState, xa: &Tensor, xb: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let model = state.bind_frozen(&mut g);
    let a = g.constant(xa.clone());
    let b = g.constant(xb.clone());
    let s = predict_pairs_graph(&mut g, &model, a, b)?;
    Ok(column(g.value(s)))
}
