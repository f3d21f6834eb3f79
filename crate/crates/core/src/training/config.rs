use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AdamConfig, ModelSpec};

/// One training run of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelSpec,
    pub epochs: usize,
    pub batch_size: usize,
    /// Evaluate every this many optimizer steps (and at step 0 and the end).
    pub eval_interval: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: AdamConfig,
}

impl TrainConfig {
    pub fn steps_per_epoch(&self, items: usize) -> usize {
        items.div_ceil(self.batch_size.max(1))
    }

    pub fn total_steps(&self, items: usize) -> usize {
        self.epochs * self.steps_per_epoch(items)
    }

    /// All violations, empty when valid. `items` is the epoch length.
    pub fn violations(&self, items: usize) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(Error::Validation(m)) = self.model.validate() {
            errs.push(m);
        }
        if self.epochs == 0 {
            errs.push("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            errs.push("batch_size must be positive".into());
        }
        if self.eval_interval == 0 {
            errs.push("eval_interval must be positive".into());
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0) || !(o.epsilon > 0.0) {
            errs.push("optimizer learning_rate and epsilon must be positive".into());
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            errs.push("optimizer betas must lie in [0, 1)".into());
        }
        if items == 0 {
            errs.push("training set is empty".into());
        } else if errs.is_empty() && self.eval_interval > self.total_steps(items) {
            errs.push(format!(
                "eval_interval {} exceeds total steps {}",
                self.eval_interval,
                self.total_steps(items)
            ));
        }
        errs
    }

    pub fn validate(&self, items: usize) -> Result<()> {
        let errs = self.violations(items);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs.join("; ")))
        }
    }
}
