//! Twin-encoder similarity learning with a relational bottleneck.
//!
//! The crate holds everything below the command line: a small reverse-mode
//! autodiff engine, procedural stimulus generators, the relational,
//! feedforward and contrastive models, the training loops for the three
//! experiments, and the post-hoc analyses run on trained embeddings.

pub mod analysis;
pub mod autodiff;
pub mod canon;
pub mod error;
pub mod models;
pub mod rng;
pub mod stimuli;
pub mod training;

pub use error::{Error, Result};
