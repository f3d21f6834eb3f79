use std::fmt::Write as _;

use relnet_core::analysis::{dimension_axes, pca};
use relnet_core::canon::fmt_f64;
use relnet_core::models::BottleneckMetric;
use relnet_core::stimuli::{build_similarity_pairs, Split};
use relnet_core::training::{embed_all, train_similarity, EvalPoint, TrainConfig, TrainingTrace};
use serde::{Deserialize, Serialize};

use super::{arm_seed, finite, median, median_steps, stimuli_seed, RunEnv};
use crate::config::{Arm, ParametricConfig};
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricRun {
    pub arm: String,
    pub replicate: usize,
    pub seed: u64,
    /// First eval step from which train MSE stays below its threshold.
    pub train_settled_step: Option<u64>,
    pub ood_settled_step: Option<u64>,
    /// First eval step from which both thresholds hold.
    pub converged_step: Option<u64>,
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub final_ood_mse: f64,
    pub angle_degrees: f64,
}

/// Feedforward against relational within one replicate, at the step where
/// relational converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodComparison {
    pub replicate: usize,
    pub relational_converged_step: Option<u64>,
    pub relational_ood_mse: Option<f64>,
    pub feedforward_ood_mse: Option<f64>,
    /// feedforward / relational OOD MSE.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub arm: String,
    /// `None` when the median replicate never settled.
    pub median_train_settled_step: Option<f64>,
    pub median_ood_settled_step: Option<f64>,
    pub min_angle_degrees: f64,
    pub median_angle_degrees: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricSummary {
    pub train_mse_threshold: f64,
    pub ood_mse_threshold: f64,
    pub runs: Vec<ParametricRun>,
    pub aggregates: Vec<ArmAggregate>,
    pub comparisons: Vec<OodComparison>,
    pub median_ood_ratio: Option<f64>,
}

impl ParametricSummary {
    pub fn runs_of(&self, arm: &str) -> impl Iterator<Item = &ParametricRun> + '_ {
        let arm = arm.to_string();
        self.runs.iter().filter(move |r| r.arm == arm)
    }

    pub fn aggregate(&self, arm: &str) -> Option<&ArmAggregate> {
        self.aggregates.iter().find(|a| a.arm == arm)
    }
}

pub fn run(cfg: &ParametricConfig, env: &mut RunEnv) -> Result<(ParametricSummary, Vec<String>)> {
    let (train_thr, ood_thr) = (cfg.analysis.train_mse_threshold, cfg.analysis.ood_mse_threshold);
    let mut runs = Vec::new();
    let mut comparisons = Vec::new();
    for r in 0..cfg.train.replicates {
        let data = build_similarity_pairs(&cfg.stimuli, stimuli_seed(cfg.master_seed, r))?;
        let input_dim = cfg.stimuli.canvas * cfg.stimuli.canvas;
        let in_dist: Vec<usize> = data.stimuli.iter().filter(|s| s.split != Split::Ood).map(|s| s.id).collect();
        let inputs: Vec<Vec<f64>> = in_dist.iter().map(|&i| data.stimuli[i].image.pixels.clone()).collect();
        let latents: Vec<_> = in_dist.iter().map(|&i| data.stimuli[i].latents).collect();
        let mut traces: Vec<(Arm, TrainingTrace)> = Vec::new();
        for &arm in &cfg.arms {
            let seed = arm_seed(cfg.master_seed, arm, r);
            let tc = TrainConfig {
                model: cfg.model.spec(arm, input_dim),
                epochs: cfg.train.epochs,
                batch_size: cfg.train.batch_size,
                eval_interval: cfg.train.eval_interval,
                seed,
                optimizer: cfg.train.optimizer,
            };
            let t0 = std::time::Instant::now();
            let trace = train_similarity(&tc, &data).map_err(|e| HarnessError::training(arm.as_str(), e))?;
            env.log(format!(
                "[{} r{r}] {} steps in {:.1}s",
                arm.as_str(),
                trace.step_losses.len(),
                t0.elapsed().as_secs_f64()
            ));
            let dir = format!("{}/r{r}", arm.as_str());
            env.record_arm(arm, r, seed, &dir, &trace, &[])?;

            let emb = embed_all(&trace.final_state, &inputs)?;
            let axes = dimension_axes(&emb, &latents)?;
            let fit = pca(&emb, 2.min(emb.dims2().map_or(1, |d| d.1)))?;
            let scores = fit.project(&emb)?;
            let mut csv = String::from("pc1,pc2,size,luminosity,split\n");
            for (k, &i) in in_dist.iter().enumerate() {
                let s = &data.stimuli[i];
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    fmt_f64(scores[k][0]),
                    fmt_f64(scores[k].get(1).copied().unwrap_or(0.0)),
                    fmt_f64(s.latents.size),
                    fmt_f64(s.latents.luminosity),
                    s.split.as_str()
                );
            }
            env.sink.write(&format!("{dir}/pca.csv"), csv.as_bytes(), "pca")?;

            let below = |e: &EvalPoint| e.train_loss < train_thr;
            let ood_below = |e: &EvalPoint| e.ood_metric.is_some_and(|v| v < ood_thr);
            let last = trace.evals.last().expect("final eval exists");
            runs.push(ParametricRun {
                arm: arm.as_str().to_string(),
                replicate: r,
                seed,
                train_settled_step: trace.settled_step(below),
                ood_settled_step: trace.settled_step(ood_below),
                converged_step: trace.settled_step(|e| below(e) && ood_below(e)),
                final_train_mse: last.train_loss,
                final_test_mse: last.id_metric.unwrap_or(f64::NAN),
                final_ood_mse: last.ood_metric.unwrap_or(f64::NAN),
                angle_degrees: axes.angle_degrees,
            });
            traces.push((arm, trace));
        }
        let find = |a: Arm| traces.iter().find(|(x, _)| *x == a).map(|(_, t)| t);
        if let (Some(rel), Some(ff)) = (find(Arm::Relational), find(Arm::Feedforward)) {
            let step = runs
                .iter()
                .find(|x| x.replicate == r && x.arm == Arm::Relational.as_str())
                .and_then(|x| x.converged_step);
            let ood_at = |t: &TrainingTrace| step.and_then(|s| t.eval_at(s)).and_then(|e| e.ood_metric);
            let (rel_ood, ff_ood) = (ood_at(rel), ood_at(ff));
            let ratio = match (rel_ood, ff_ood) {
                (Some(a), Some(b)) if a > 0.0 => finite(b / a),
                _ => None,
            };
            comparisons.push(OodComparison {
                replicate: r,
                relational_converged_step: step,
                relational_ood_mse: rel_ood,
                feedforward_ood_mse: ff_ood,
                ratio,
            });
        }
    }

    let aggregates = cfg
        .arms
        .iter()
        .map(|arm| {
            let mine: Vec<&ParametricRun> = runs.iter().filter(|r| r.arm == arm.as_str()).collect();
            let mut angles: Vec<f64> = mine.iter().map(|r| r.angle_degrees).collect();
            ArmAggregate {
                arm: arm.as_str().to_string(),
                median_train_settled_step: median_steps(&mine.iter().map(|r| r.train_settled_step).collect::<Vec<_>>()),
                median_ood_settled_step: median_steps(&mine.iter().map(|r| r.ood_settled_step).collect::<Vec<_>>()),
                min_angle_degrees: angles.iter().copied().fold(f64::INFINITY, f64::min),
                median_angle_degrees: median(&mut angles).unwrap_or(f64::NAN),
            }
        })
        .collect();
    let mut ratios: Vec<f64> = comparisons.iter().filter_map(|c| c.ratio).collect();
    let summary = ParametricSummary {
        train_mse_threshold: train_thr,
        ood_mse_threshold: ood_thr,
        runs,
        aggregates,
        comparisons,
        median_ood_ratio: median(&mut ratios),
    };

    let mut notes = vec![
        "steps-to-threshold is the first evaluation step from which the metric stays below its threshold through the end of training; a run that never settles counts as infinitely slow in medians".to_string(),
        format!(
            "OOD targets use the normalizer sqrt(2) * (1 + ood_band) = {:.4} on every split",
            (std::f64::consts::SQRT_2 * (1.0 + cfg.stimuli.ood_band))
        ),
    ];
    if cfg.model.metric != BottleneckMetric::Euclidean {
        notes.push(format!(
            "relational bottleneck maps distance with {} instead of exp(-distance)",
            serde_json::to_value(cfg.model.metric).expect("metric serializes")
        ));
    }
    Ok((summary, notes))
}
