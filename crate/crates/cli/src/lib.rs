//! Experiment harness for the `relnet` tool: config parsing and validation,
//! the three experiment runners, run manifests and reports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod report;
pub mod run;
pub mod stimuli;

pub use config::{load_config, parse_config, resolve_output_dir, Arm, ExperimentConfig, ExperimentKind};
pub use error::{exit, HarnessError, Result};
pub use experiments::Summary;
pub use manifest::{load_manifest, RunManifest};
pub use report::write_report;
pub use run::{run_config, run_experiment, RunOptions, RunOutcome};
