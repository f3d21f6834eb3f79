//! NT-Xent (normalized temperature-scaled cross entropy).

use super::similarity::row_normalize;
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Added to self-similarity logits so they drop out of the softmax.
const SELF_MASK: f64 = -1e9;

/// NT-Xent over `2N` views laid out as `[view1 of items 0..N; view2 of
/// items 0..N]`: row `i` and row `i + N` are positives, every other row is a
/// negative. Cosine similarity, temperature `tau`, averaged over all `2N`
/// anchors.
pub fn nt_xent_graph(g: &mut Graph, z: Var, temperature: f64) -> Result<Var> {
    let (rows, _) = g
        .value(z)
        .dims2()
        .ok_or_else(|| Error::structural("contrastive_loss", "embeddings must be 2-D"))?;
    if rows % 2 != 0 {
        return Err(Error::structural("contrastive_loss", format!("need an even number of views, got {rows}")));
    }
    let n = rows / 2;
    if n < 2 {
        return Err(Error::Validation(format!("contrastive loss needs >= 2 positive pairs, got {n}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::Validation(format!("temperature must be positive, got {temperature}")));
    }
    let zn = row_normalize(g, z)?;
    let sim = g.matmul_t(zn, zn)?;
    let logits = g.scale(sim, 1.0 / temperature)?;
    let mut mask = Tensor::zeros(vec![rows, rows]);
    let mut partner = Tensor::zeros(vec![rows, rows]);
    for i in 0..rows {
        mask.data_mut()[i * rows + i] = SELF_MASK;
        partner.data_mut()[i * rows + (i + n) % rows] = 1.0;
    }
    let mask = g.constant(mask);
    let partner = g.constant(partner);
    let masked = g.add(logits, mask)?;
    let p = g.softmax_row(masked)?;
    let pos = g.mul(p, partner)?;
    let pos = g.sum_axis(pos, 1)?;
    let lp = g.log(pos)?;
    let mean = g.mean(lp)?;
    g.scale(mean, -1.0)
}

/// Loss value for fixed embeddings.
pub fn contrastive_loss(embeddings: &Tensor, temperature: f64) -> Result<f64> {
    let mut g = Graph::new();
    let z = g.constant(embeddings.clone());
    let l = nt_xent_graph(&mut g, z, temperature)?;
    Ok(g.value(l).item().expect("scalar loss"))
}

/// Encoder then projection head, NT-Xent on the projections. `x` holds
/// `2N` flattened views in the paired layout described above.
pub fn contrastive_model_loss_graph(
    g: &mut Graph,
    model: &super::state::BoundModel,
    x: Var,
    temperature: f64,
) -> Result<Var> {
    if model.head.is_empty() {
        return Err(Error::structural("contrastive_loss", "model has no projection head"));
    }
    let e = super::state::encode_graph(g, model, x)?;
    let z = super::state::mlp(g, &model.head, e)?;
    nt_xent_graph(g, z, temperature)
}
