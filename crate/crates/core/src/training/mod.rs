//! Training loops for the three experiments.
//!
//! Every loop draws mini-batches from a per-epoch seeded permutation, so a
//! longer run replays a shorter one exactly up to the shorter run's last
//! step.

mod categorical;
mod config;
mod engine;
mod oddball;
mod similarity;
mod trace;

pub use categorical::{categorical_accuracy, train_categorical, CategoricalOutcome, CategoricalTargets, SAME_THRESHOLD, SAME_TARGET};
pub use config::TrainConfig;
pub use engine::{checkpoint_steps, embed_all, pair_predictions};
pub use oddball::{oddball_accuracy, train_oddball_encoders, trial_embeddings, OddballData, OddballTrainConfig};
pub use similarity::{pair_mse, train_similarity};
pub use trace::{EvalPoint, TrainingTrace};

#[cfg(test)]
mod tests;
