use std::fs;

use relnet_core::analysis::{
    category_decoding, correlate_error_profiles, error_rates_by_category, oddball_pick, pca, regularity_decoding, scatter_csv,
    CategoryErrorRate, DecodingReport, ProfileCorrelation, RegularityCurve,
};
use relnet_core::autodiff::Tensor;
use relnet_core::rng::derive_seed;
use relnet_core::stimuli::{build_quadrilateral_catalog, build_trial_set, OddballTrial, TRIAL_SIZE};
use relnet_core::training::{checkpoint_steps, train_oddball_encoders, trial_embeddings, OddballData, OddballTrainConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use super::{arm_seed, finite, stimuli_seed, RunEnv};
use crate::config::{ExternalProfile, OddballConfig};
use crate::error::{HarnessError, Result};

/// Training trials in the full-scale budget.
const REFERENCE_TRAIN_TRIALS: usize = 60_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRegularity {
    pub step: u64,
    pub fraction: f64,
    /// Oddball-task accuracy on the evaluation trials.
    pub accuracy: f64,
    /// Slope of error rate against irregularity. Positive means more
    /// irregular shapes are harder.
    pub slope: f64,
    pub spearman: Option<f64>,
    pub categories: Vec<CategoryErrorRate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMatch {
    pub profile: String,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub shared: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddballArmSummary {
    pub arm: String,
    pub seed: u64,
    pub checkpoints: Vec<CheckpointRegularity>,
    pub regularity_decoding: DecodingReport,
    pub category_decoding: DecodingReport,
    pub profiles: Vec<ProfileMatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddballSummary {
    pub train_trials: usize,
    pub eval_trials: usize,
    pub arms: Vec<OddballArmSummary>,
}

impl OddballSummary {
    pub fn arm(&self, arm: &str) -> Option<&OddballArmSummary> {
        self.arms.iter().find(|a| a.arm == arm)
    }
}

impl OddballArmSummary {
    pub fn final_checkpoint(&self) -> Option<&CheckpointRegularity> {
        self.checkpoints.last()
    }
}

fn picks(emb: &Tensor, trials: &[OddballTrial]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(trials.len());
    for k in 0..trials.len() {
        let rows: Vec<&[f64]> = (0..TRIAL_SIZE).map(|p| emb.row(k * TRIAL_SIZE + p)).collect();
        out.push(oddball_pick(&rows)?);
    }
    Ok(out)
}

/// `category,error_rate`, header required.
pub fn read_profile(profile: &ExternalProfile, base: &std::path::Path) -> Result<Vec<(String, f64)>> {
    let path = base.join(&profile.path);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let corrupt = |detail: String| HarnessError::Corrupt {
        path: path.clone(),
        detail,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("category,error_rate") => {}
        other => return Err(corrupt(format!("expected header category,error_rate, got {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let (name, rate) = line
                .split_once(',')
                .ok_or_else(|| corrupt(format!("line {}: expected two fields", i + 2)))?;
            let rate: f64 = rate
                .trim()
                .parse()
                .map_err(|_| corrupt(format!("line {}: bad error rate {rate:?}", i + 2)))?;
            Ok((name.trim().to_string(), rate))
        })
        .collect()
}

pub fn run(cfg: &OddballConfig, env: &mut RunEnv) -> Result<(OddballSummary, Vec<String>)> {
    let catalog = build_quadrilateral_catalog();
    let tc = cfg.stimuli.trial_config();
    let seed = stimuli_seed(cfg.master_seed, 0);
    let data = OddballData {
        train: build_trial_set(&catalog, cfg.stimuli.train_trials, &tc, seed, "train")?,
        eval: build_trial_set(&catalog, cfg.stimuli.eval_trials_per_category * catalog.len(), &tc, seed, "eval")?,
    };
    let externals: Vec<(String, Vec<(String, f64)>)> = cfg
        .analysis
        .external_profiles
        .iter()
        .map(|p| Ok((p.name.clone(), read_profile(p, &env.config_dir)?)))
        .collect::<Result<_>>()?;
    let input_dim = cfg.stimuli.canvas * cfg.stimuli.canvas;
    let decoding_seed = derive_seed(cfg.master_seed, "analysis/decoding", 0);

    let mut arms = Vec::new();
    for &arm in &cfg.arms {
        let arm_seed = arm_seed(cfg.master_seed, arm, 0);
        let otc = OddballTrainConfig {
            train: TrainConfig {
                model: cfg.model.spec(arm, input_dim),
                epochs: cfg.train.epochs,
                batch_size: cfg.train.batch_size,
                eval_interval: cfg.train.eval_interval,
                seed: arm_seed,
                optimizer: cfg.train.optimizer,
            },
            temperature: cfg.train.temperature,
            checkpoint_fractions: cfg.train.checkpoint_fractions.clone(),
            probe_trials: cfg.train.probe_trials,
        };
        let t0 = std::time::Instant::now();
        let trace = train_oddball_encoders(&otc, &data).map_err(|e| HarnessError::training(arm.as_str(), e))?;
        env.log(format!("[{}] trained in {:.1}s", arm.as_str(), t0.elapsed().as_secs_f64()));
        let dir = arm.as_str().to_string();
        env.record_arm(arm, 0, arm_seed, &dir, &trace, &trace.checkpoints)?;

        let steps = checkpoint_steps(&otc.checkpoint_fractions, otc.train.total_steps(data.train.len()));
        let mut checkpoints = Vec::new();
        let mut final_emb = None;
        for (i, state) in trace.checkpoints.iter().enumerate() {
            let emb = trial_embeddings(state, &data.eval)?;
            let p = picks(&emb, &data.eval)?;
            let curve: RegularityCurve = error_rates_by_category(&data.eval, &p, &catalog)?;
            env.sink.write(&format!("{dir}/regularity_{i}.csv"), curve.to_csv().as_bytes(), "regularity")?;
            let hits = p.iter().zip(&data.eval).filter(|(p, t)| **p == t.oddball_index).count();
            let mut profiles = Vec::new();
            if i + 1 == trace.checkpoints.len() {
                for (name, table) in &externals {
                    let c: ProfileCorrelation = correlate_error_profiles(&curve, table)?;
                    profiles.push(ProfileMatch {
                        profile: name.clone(),
                        pearson: finite(c.pearson),
                        spearman: finite(c.spearman),
                        shared: c.shared,
                    });
                }
                final_emb = Some((emb, profiles));
            }
            checkpoints.push(CheckpointRegularity {
                step: steps[i],
                fraction: otc.checkpoint_fractions[i],
                accuracy: hits as f64 / data.eval.len() as f64,
                slope: curve.slope,
                spearman: finite(curve.irregularity_spearman()),
                categories: curve.categories,
            });
        }
        let (emb, profiles) = final_emb.expect("at least one checkpoint");

        // Decoding and the scatter use the five reference renders of each
        // evaluation trial.
        let mut rows = Vec::new();
        let mut regularity = Vec::new();
        let mut category = Vec::new();
        for (k, t) in data.eval.iter().enumerate() {
            for p in t.variant_positions() {
                rows.push(emb.row(k * TRIAL_SIZE + p));
                regularity.push(t.category.regularity_score as f64);
                category.push(t.category_index);
            }
        }
        let x = Tensor::from_rows(&rows)?;
        let t1 = std::time::Instant::now();
        let reg = regularity_decoding(&x, &regularity, &cfg.analysis.decoding, decoding_seed)?;
        let cat = category_decoding(&x, &category, &cfg.analysis.decoding, decoding_seed)?;
        env.log(format!(
            "[{}] decoding R2 {:.3}, category accuracy {:.3} ({:.1}s)",
            arm.as_str(),
            reg.mean_score,
            cat.mean_score,
            t1.elapsed().as_secs_f64()
        ));
        let fit = pca(&x, 2)?;
        let labels: Vec<String> = regularity.iter().map(|r| format!("{r}")).collect();
        env.sink
            .write(&format!("{dir}/scatter.csv"), scatter_csv(&fit.project(&x)?, &labels).as_bytes(), "scatter")?;

        arms.push(OddballArmSummary {
            arm: arm.as_str().to_string(),
            seed: arm_seed,
            checkpoints,
            regularity_decoding: reg,
            category_decoding: cat,
            profiles,
        });
    }

    let notes = vec![
        format!(
            "training budget is {} trials, {:.3} of the full {} trial budget",
            cfg.stimuli.train_trials,
            cfg.stimuli.train_trials as f64 / REFERENCE_TRAIN_TRIALS as f64,
            REFERENCE_TRAIN_TRIALS
        ),
        "encoders are fully connected networks over flattened pixels".to_string(),
        "training uses reference renders only; oddball shapes are never trained on".to_string(),
        "decoding fits principal components on the evaluation trials' reference-render embeddings, with folds over those rows".to_string(),
        "scatter labels are regularity scores".to_string(),
    ];
    Ok((
        OddballSummary {
            train_trials: data.train.len(),
            eval_trials: data.eval.len(),
            arms,
        },
        notes,
    ))
}
