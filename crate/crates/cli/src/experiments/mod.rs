//! One runner per experiment kind. Each trains its arms, writes artifacts
//! through an [`ArtifactSink`], and returns a typed summary plus the notes
//! that belong in the manifest.

pub mod categorical;
pub mod oddball;
pub mod parametric;

use std::path::PathBuf;

use relnet_core::models::{encode_checkpoint, ModelState};
use relnet_core::rng::derive_seed;
use relnet_core::training::TrainingTrace;
use serde::{Deserialize, Serialize};

use crate::config::Arm;
use crate::error::Result;
use crate::manifest::{ArmRecord, ArtifactSink};

pub use categorical::CategoricalSummary;
pub use oddball::OddballSummary;
pub use parametric::ParametricSummary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Summary {
    ParametricSimilarity(ParametricSummary),
    Oddball(OddballSummary),
    Categorical(CategoricalSummary),
}

/// Everything a runner needs besides its own config.
pub struct RunEnv<'a> {
    pub sink: &'a mut ArtifactSink,
    pub arms: Vec<ArmRecord>,
    /// Directory of the config file, for resolving relative input paths.
    pub config_dir: PathBuf,
    pub verbose: bool,
}

impl RunEnv<'_> {
    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Write the trace, per-step losses and checkpoints of one trained arm
    /// under `dir` and record them.
    pub fn record_arm(
        &mut self,
        arm: Arm,
        replicate: usize,
        seed: u64,
        dir: &str,
        trace: &TrainingTrace,
        intermediate: &[ModelState],
    ) -> Result<()> {
        let trace_path = self.sink.write(&format!("{dir}/trace.csv"), trace.to_csv().as_bytes(), "trace")?;
        let losses = self.sink.write(&format!("{dir}/losses.csv"), trace.losses_csv().as_bytes(), "losses")?;
        let mut checkpoints = Vec::new();
        for (i, state) in intermediate.iter().enumerate() {
            let bytes = encode_checkpoint(state)?;
            checkpoints.push(self.sink.write(&format!("{dir}/checkpoint_{i}.ckpt"), &bytes, "checkpoint")?);
        }
        let bytes = encode_checkpoint(&trace.final_state)?;
        checkpoints.push(self.sink.write(&format!("{dir}/model.ckpt"), &bytes, "checkpoint")?);
        self.arms.push(ArmRecord {
            arm: arm.as_str().to_string(),
            replicate,
            seed,
            trace: trace_path,
            losses,
            checkpoints,
        });
        Ok(())
    }
}

/// Training seed of one arm. Keyed by the arm's name, so adding or removing
/// arms leaves the others' streams untouched.
pub fn arm_seed(master: u64, arm: Arm, replicate: usize) -> u64 {
    derive_seed(master, &format!("arm/{}", arm.as_str()), replicate as u64)
}

/// Dataset seed of one replicate, shared by every arm.
pub fn stimuli_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, "stimuli", replicate as u64)
}

/// Median where `None` stands for "never" (+inf). `None` when the median
/// itself is infinite or `values` is empty.
pub fn median_steps(values: &[Option<u64>]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().map(|s| s.map_or(f64::INFINITY, |x| x as f64)).collect();
    median(&mut v).filter(|m| m.is_finite())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// `Some(x)` for finite `x`; JSON has no NaN or infinity.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
