//! Relational, feedforward and contrastive twin-encoder models.

mod adam;
mod checkpoint;
mod contrastive;
mod similarity;
mod spec;
mod state;

pub use adam::{optimizer_step, AdamConfig, OptimizerState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use contrastive::{contrastive_loss, contrastive_model_loss_graph, nt_xent_graph};
pub use similarity::{
    bottleneck_graph, feedforward_head_graph, feedforward_similarity, predict_pairs, predict_pairs_graph,
    relational_similarity, row_normalize,
};
pub use spec::{Activation, BottleneckMetric, EncoderSpec, HeadSpec, ModelKind, ModelSpec};
pub use state::{batch_from_rows, encode, encode_graph, init_parameters, mlp, BoundModel, ModelState};

#[cfg(test)]
mod tests;
