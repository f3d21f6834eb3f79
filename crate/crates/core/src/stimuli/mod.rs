//! Procedural stimuli for the three experiments.

mod export;
mod image;
mod oddball;
mod onehot;
mod pairs;
mod parametric;
mod quad;

pub use export::{export_categorical, export_pair_dataset, export_trials};
pub use image::{rasterize, GrayscaleImage};
pub use oddball::{
    bottom_right_index, build_oddball_trial, build_trial_set, make_oddball, render_quadrilateral, render_views,
    OddballTrial, Transform, TrialConfig, DEFAULT_PERTURBATION, TRIAL_SIZE,
};
pub use onehot::{build_onehot_dataset, categorical_target, CategoricalDataset, CategoricalPair, CategoricalStimulus};
pub use pairs::{
    build_similarity_pairs, target_similarity, Pair, PairConfig, PairDataset, Split, Stimulus,
    IN_DISTRIBUTION_NORMALIZER,
};
pub use parametric::{disc_intensity, disc_radius, render_parametric_shape, LatentFeatures, LATENT_CAP, MIN_CANVAS};
pub use quad::{
    build_quadrilateral_catalog, is_simple, max_regularity, measure_properties, side_lengths, signed_area,
    vertex_angles, Point, QuadrilateralCategory, ShapeProperties, ANGLE_TOL, LENGTH_TOL,
};
