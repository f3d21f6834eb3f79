//! Post-hoc measurements on trained embeddings.

mod axes;
mod correlation;
mod decoding;
mod export;
pub mod linalg;
mod pca;
mod regularity;

pub use axes::{dimension_axes, DimensionAxes, AXIS_COMPONENTS};
pub use correlation::{average_ranks, correlate_error_profiles, pearson, spearman, ProfileCorrelation};
pub use decoding::{category_decoding, fold_assignment, regularity_decoding, DecodingConfig, DecodingReport};
pub use export::scatter_csv;
pub use pca::{pca, PcaResult};
pub use regularity::{
    error_rates_by_category, ols_slope, oddball_pick, CategoryErrorRate, RegularityCurve, MIN_TRIALS_PER_CATEGORY,
};
