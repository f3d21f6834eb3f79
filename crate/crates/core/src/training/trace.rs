use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::canon::fmt_f64;
use crate::models::ModelState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    /// Loss over the full training set (not the last mini-batch).
    pub train_loss: f64,
    pub id_metric: Option<f64>,
    pub ood_metric: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainingTrace {
    pub arm: String,
    /// Mini-batch loss of every optimizer step.
    pub step_losses: Vec<f64>,
    pub evals: Vec<EvalPoint>,
    pub epoch_seconds: Vec<f64>,
    /// Held-out records that entered a gradient pass. Always 0; kept so the
    /// property is observable.
    pub heldout_gradient_touches: u64,
    pub final_state: ModelState,
    pub checkpoints: Vec<ModelState>,
}

impl TrainingTrace {
    /// `step,train_loss,id_metric,ood_metric`; missing metrics are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,train_loss,id_metric,ood_metric\n");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for e in &self.evals {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.step,
                fmt_f64(e.train_loss),
                opt(e.id_metric),
                opt(e.ood_metric)
            );
        }
        out
    }

    /// `step,loss` for every optimizer step.
    pub fn losses_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (i, l) in self.step_losses.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, fmt_f64(*l));
        }
        out
    }

    /// First eval step satisfying `pred`.
    pub fn first_step_where(&self, pred: impl Fn(&EvalPoint) -> bool) -> Option<u64> {
        self.evals.iter().find(|e| pred(e)).map(|e| e.step)
    }

    /// First eval step from which `pred` holds at every later eval, i.e. the
    /// point where a metric crosses a threshold and stays there. `None` when
    /// the last eval fails `pred`.
    pub fn settled_step(&self, pred: impl Fn(&EvalPoint) -> bool) -> Option<u64> {
        let tail = self.evals.iter().rev().take_while(|e| pred(e)).count();
        (tail > 0).then(|| self.evals[self.evals.len() - tail].step)
    }

    pub fn eval_at(&self, step: u64) -> Option<&EvalPoint> {
        self.evals.iter().find(|e| e.step == step)
    }
}
