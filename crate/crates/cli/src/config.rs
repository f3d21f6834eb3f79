//! Experiment configuration: a strict JSON schema derived from the typed
//! defaults, plus cross-field rules. Validation collects every violation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use relnet_core::analysis::{DecodingConfig, MIN_TRIALS_PER_CATEGORY};
use relnet_core::canon::canonicalize;
use relnet_core::models::{Activation, AdamConfig, BottleneckMetric, EncoderSpec, ModelKind, ModelSpec};
use relnet_core::stimuli::{PairConfig, TrialConfig};
use relnet_core::training::CategoricalTargets;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "RELNET_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Relational,
    Feedforward,
    Contrastive,
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Relational => "relational",
            Arm::Feedforward => "feedforward",
            Arm::Contrastive => "contrastive",
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Arm::Relational => ModelKind::Relational,
            Arm::Feedforward => ModelKind::Feedforward,
            Arm::Contrastive => ModelKind::Contrastive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ParametricSimilarity,
    Oddball,
    Categorical,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [
        ExperimentKind::ParametricSimilarity,
        ExperimentKind::Oddball,
        ExperimentKind::Categorical,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::ParametricSimilarity => "parametric-similarity",
            ExperimentKind::Oddball => "oddball",
            ExperimentKind::Categorical => "categorical",
        }
    }

    fn allowed_arms(&self) -> &'static [Arm] {
        match self {
            ExperimentKind::Oddball => &[Arm::Relational, Arm::Contrastive],
            _ => &[Arm::Relational, Arm::Feedforward],
        }
    }
}

/// Encoder plus the feedforward head, for pair-similarity experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairModel {
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    /// Hidden widths of the feedforward arm's head.
    pub head_hidden_dims: Vec<usize>,
    /// Relational bottleneck.
    pub metric: BottleneckMetric,
}

impl Default for PairModel {
    fn default() -> Self {
        PairModel {
            hidden_dims: vec![64, 32],
            embedding_dim: 16,
            head_hidden_dims: vec![64],
            metric: BottleneckMetric::Euclidean,
        }
    }
}

impl PairModel {
    pub fn spec(&self, arm: Arm, input_dim: usize) -> ModelSpec {
        let encoder = encoder(input_dim, &self.hidden_dims, self.embedding_dim);
        match arm {
            Arm::Feedforward => ModelSpec::feedforward(encoder, self.head_hidden_dims.clone()),
            _ => {
                let mut spec = ModelSpec::relational(encoder);
                spec.metric = self.metric;
                spec
            }
        }
    }
}

fn encoder(input_dim: usize, hidden: &[usize], embedding_dim: usize) -> EncoderSpec {
    EncoderSpec {
        input_dim,
        hidden_dims: hidden.to_vec(),
        embedding_dim,
        activation: Activation::Relu,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplicatedTrain {
    /// Independent seeds per arm; each replicate also draws its own dataset.
    pub replicates: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_interval: usize,
    pub optimizer: AdamConfig,
}

impl Default for ReplicatedTrain {
    fn default() -> Self {
        ReplicatedTrain {
            replicates: 5,
            epochs: 10,
            batch_size: 64,
            eval_interval: 10,
            optimizer: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParametricAnalysis {
    pub train_mse_threshold: f64,
    pub ood_mse_threshold: f64,
}

impl Default for ParametricAnalysis {
    fn default() -> Self {
        ParametricAnalysis {
            train_mse_threshold: 0.01,
            ood_mse_threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParametricConfig {
    pub name: String,
    pub arms: Vec<Arm>,
    pub master_seed: u64,
    pub output_dir: Option<String>,
    pub stimuli: PairConfig,
    pub model: PairModel,
    pub train: ReplicatedTrain,
    pub analysis: ParametricAnalysis,
}

impl Default for ParametricConfig {
    fn default() -> Self {
        ParametricConfig {
            name: "parametric".into(),
            arms: vec![Arm::Relational, Arm::Feedforward],
            master_seed: 0,
            output_dir: None,
            stimuli: PairConfig {
                canvas: 16,
                ..PairConfig::default()
            },
            model: PairModel::default(),
            train: ReplicatedTrain::default(),
            analysis: ParametricAnalysis::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OddballStimuli {
    pub canvas: usize,
    pub perturbation: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    pub train_trials: usize,
    pub eval_trials_per_category: usize,
}

impl Default for OddballStimuli {
    fn default() -> Self {
        let t = TrialConfig::default();
        OddballStimuli {
            canvas: 24,
            perturbation: t.perturbation,
            min_scale: t.min_scale,
            max_scale: t.max_scale,
            train_trials: 6000,
            eval_trials_per_category: 50,
        }
    }
}

impl OddballStimuli {
    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            canvas: self.canvas,
            perturbation: self.perturbation,
            min_scale: self.min_scale,
            max_scale: self.max_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OddballModel {
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub metric: BottleneckMetric,
    /// Contrastive projection head.
    pub projection_hidden_dims: Vec<usize>,
    pub projection_dim: usize,
}

impl Default for OddballModel {
    fn default() -> Self {
        OddballModel {
            hidden_dims: vec![128, 64],
            embedding_dim: 32,
            metric: BottleneckMetric::Euclidean,
            projection_hidden_dims: vec![32],
            projection_dim: 32,
        }
    }
}

impl OddballModel {
    pub fn spec(&self, arm: Arm, input_dim: usize) -> ModelSpec {
        let encoder = encoder(input_dim, &self.hidden_dims, self.embedding_dim);
        match arm {
            Arm::Contrastive => ModelSpec::contrastive(encoder, self.projection_hidden_dims.clone(), self.projection_dim),
            _ => {
                let mut spec = ModelSpec::relational(encoder);
                spec.metric = self.metric;
                spec
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OddballTrain {
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_interval: usize,
    pub optimizer: AdamConfig,
    pub temperature: f64,
    pub checkpoint_fractions: Vec<f64>,
    pub probe_trials: usize,
}

impl Default for OddballTrain {
    fn default() -> Self {
        OddballTrain {
            epochs: 10,
            batch_size: 32,
            eval_interval: 188,
            optimizer: AdamConfig::default(),
            temperature: 0.5,
            checkpoint_fractions: vec![0.25, 0.5, 1.0],
            probe_trials: 256,
        }
    }
}

/// Per-category error rates from another observer group, as a CSV with
/// `category,error_rate` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalProfile {
    pub name: String,
    /// Relative paths resolve against the config file's directory.
    pub path: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OddballAnalysis {
    pub decoding: DecodingConfig,
    pub external_profiles: Vec<ExternalProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OddballConfig {
    pub name: String,
    pub arms: Vec<Arm>,
    pub master_seed: u64,
    pub output_dir: Option<String>,
    pub stimuli: OddballStimuli,
    pub model: OddballModel,
    pub train: OddballTrain,
    pub analysis: OddballAnalysis,
}

impl Default for OddballConfig {
    fn default() -> Self {
        OddballConfig {
            name: "oddball".into(),
            arms: vec![Arm::Relational, Arm::Contrastive],
            master_seed: 0,
            output_dir: None,
            stimuli: OddballStimuli::default(),
            model: OddballModel::default(),
            train: OddballTrain::default(),
            analysis: OddballAnalysis::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoricalStimuli {
    pub n_values: usize,
    pub n_train: usize,
}

impl Default for CategoricalStimuli {
    fn default() -> Self {
        CategoricalStimuli { n_values: 30, n_train: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoricalTrain {
    pub replicates: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_interval: usize,
    pub optimizer: AdamConfig,
    pub targets: CategoricalTargets,
}

impl Default for CategoricalTrain {
    fn default() -> Self {
        CategoricalTrain {
            replicates: 5,
            epochs: 200,
            batch_size: 32,
            eval_interval: 150,
            optimizer: AdamConfig::default(),
            targets: CategoricalTargets::SameDifferent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoricalConfig {
    pub name: String,
    pub arms: Vec<Arm>,
    pub master_seed: u64,
    pub output_dir: Option<String>,
    pub stimuli: CategoricalStimuli,
    pub model: PairModel,
    pub train: CategoricalTrain,
}

impl Default for CategoricalConfig {
    fn default() -> Self {
        CategoricalConfig {
            name: "categorical".into(),
            arms: vec![Arm::Relational, Arm::Feedforward],
            master_seed: 0,
            output_dir: None,
            stimuli: CategoricalStimuli::default(),
            model: PairModel {
                hidden_dims: vec![64],
                ..PairModel::default()
            },
            train: CategoricalTrain::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    ParametricSimilarity(ParametricConfig),
    Oddball(OddballConfig),
    Categorical(CategoricalConfig),
}

impl ExperimentConfig {
    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::ParametricSimilarity => ExperimentConfig::ParametricSimilarity(ParametricConfig::default()),
            ExperimentKind::Oddball => ExperimentConfig::Oddball(OddballConfig::default()),
            ExperimentKind::Categorical => ExperimentConfig::Categorical(CategoricalConfig::default()),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentConfig::ParametricSimilarity(_) => ExperimentKind::ParametricSimilarity,
            ExperimentConfig::Oddball(_) => ExperimentKind::Oddball,
            ExperimentConfig::Categorical(_) => ExperimentKind::Categorical,
        }
    }

    fn common(&self) -> (&str, &[Arm], u64, Option<&str>) {
        match self {
            ExperimentConfig::ParametricSimilarity(c) => (&c.name, &c.arms, c.master_seed, c.output_dir.as_deref()),
            ExperimentConfig::Oddball(c) => (&c.name, &c.arms, c.master_seed, c.output_dir.as_deref()),
            ExperimentConfig::Categorical(c) => (&c.name, &c.arms, c.master_seed, c.output_dir.as_deref()),
        }
    }

    pub fn name(&self) -> &str {
        self.common().0
    }

    pub fn arms(&self) -> &[Arm] {
        self.common().1
    }

    pub fn master_seed(&self) -> u64 {
        self.common().2
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.common().3
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::ParametricSimilarity(c) => c.master_seed = seed,
            ExperimentConfig::Oddball(c) => c.master_seed = seed,
            ExperimentConfig::Categorical(c) => c.master_seed = seed,
        }
    }

    /// Canonical JSON of the resolved config (every default materialized).
    pub fn to_canonical(&self) -> String {
        canonicalize(&serde_json::to_value(self).expect("config serializes"))
    }

    /// Every cross-field rule violation, each prefixed with its field path.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let (name, arms, _, _) = self.common();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            errs.push(format!("name: must be non-empty and use only [A-Za-z0-9._-] (got {name:?})"));
        }
        let allowed = self.kind().allowed_arms();
        if arms.is_empty() {
            errs.push("arms: at least one arm required".into());
        }
        let mut seen = BTreeSet::new();
        for a in arms {
            if !allowed.contains(a) {
                errs.push(format!(
                    "arms: {} is not available for {} (allowed: {})",
                    a.as_str(),
                    self.kind().as_str(),
                    allowed.iter().map(Arm::as_str).collect::<Vec<_>>().join(", ")
                ));
            }
            if !seen.insert(*a) {
                errs.push(format!("arms: {} listed twice", a.as_str()));
            }
        }
        match self {
            ExperimentConfig::ParametricSimilarity(c) => {
                prefixed(
                    &mut errs,
                    "stimuli",
                    &["grid", "ood_band", "canvas", "test_fraction", "eval_pairs"],
                    c.stimuli.validate(),
                );
                model_rules(&mut errs, &c.model.hidden_dims, c.model.embedding_dim, &c.model.head_hidden_dims);
                let train_points = {
                    let n = c.stimuli.grid * c.stimuli.grid;
                    let test = ((n as f64 * c.stimuli.test_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
                    n.saturating_sub(test)
                };
                let t = &c.train;
                schedule_rules(&mut errs, t.epochs, t.batch_size, t.eval_interval, &t.optimizer, train_points * (train_points + 1) / 2);
                if t.replicates == 0 {
                    errs.push("train.replicates: must be positive".into());
                }
                for (field, v) in [
                    ("train_mse_threshold", c.analysis.train_mse_threshold),
                    ("ood_mse_threshold", c.analysis.ood_mse_threshold),
                ] {
                    if !(v > 0.0) {
                        errs.push(format!("analysis.{field}: must be positive (got {v})"));
                    }
                }
            }
            ExperimentConfig::Oddball(c) => {
                prefixed(&mut errs, "stimuli", &["canvas", "perturbation"], c.stimuli.trial_config().validate());
                if c.stimuli.train_trials == 0 {
                    errs.push("stimuli.train_trials: must be positive".into());
                }
                if c.stimuli.eval_trials_per_category < MIN_TRIALS_PER_CATEGORY {
                    errs.push(format!(
                        "stimuli.eval_trials_per_category: at least {MIN_TRIALS_PER_CATEGORY} required (got {})",
                        c.stimuli.eval_trials_per_category
                    ));
                }
                model_rules(&mut errs, &c.model.hidden_dims, c.model.embedding_dim, &c.model.projection_hidden_dims);
                if c.model.projection_dim == 0 {
                    errs.push("model.projection_dim: must be positive".into());
                }
                let t = &c.train;
                schedule_rules(&mut errs, t.epochs, t.batch_size, t.eval_interval, &t.optimizer, c.stimuli.train_trials);
                if !(t.temperature > 0.0) {
                    errs.push(format!("train.temperature: must be positive (got {})", t.temperature));
                }
                if t.checkpoint_fractions.is_empty() {
                    errs.push("train.checkpoint_fractions: at least one fraction required".into());
                }
                if t.checkpoint_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                    errs.push("train.checkpoint_fractions: every fraction must lie in (0, 1]".into());
                }
                if t.checkpoint_fractions.windows(2).any(|w| w[0] >= w[1]) {
                    errs.push("train.checkpoint_fractions: must be strictly increasing".into());
                }
                if t.probe_trials == 0 {
                    errs.push("train.probe_trials: must be positive".into());
                }
                let d = &c.analysis.decoding;
                if d.n_folds < 2 {
                    errs.push(format!("analysis.decoding.n_folds: at least 2 required (got {})", d.n_folds));
                }
                if d.max_components == 0 {
                    errs.push("analysis.decoding.max_components: must be positive".into());
                }
                if d.classifier_steps == 0 || !(d.classifier_learning_rate > 0.0) {
                    errs.push("analysis.decoding: classifier_steps and classifier_learning_rate must be positive".into());
                }
                let mut names = BTreeSet::new();
                for (i, p) in c.analysis.external_profiles.iter().enumerate() {
                    if p.name.is_empty() || p.path.is_empty() {
                        errs.push(format!("analysis.external_profiles[{i}]: name and path must be non-empty"));
                    }
                    if !names.insert(p.name.as_str()) {
                        errs.push(format!("analysis.external_profiles[{i}]: duplicate name {:?}", p.name));
                    }
                }
            }
            ExperimentConfig::Categorical(c) => {
                let (n, k) = (c.stimuli.n_values, c.stimuli.n_train);
                if n < 2 {
                    errs.push(format!("stimuli.n_values: at least 2 required (got {n})"));
                }
                if k < 2 || k > n * n {
                    errs.push(format!("stimuli.n_train: must lie in [2, n_values^2] (got {k})"));
                }
                model_rules(&mut errs, &c.model.hidden_dims, c.model.embedding_dim, &c.model.head_hidden_dims);
                let t = &c.train;
                schedule_rules(&mut errs, t.epochs, t.batch_size, t.eval_interval, &t.optimizer, k * (k + 1) / 2);
                if t.replicates == 0 {
                    errs.push("train.replicates: must be positive".into());
                }
            }
        }
        errs
    }
}

/// Prefix messages from a section's own validator with the section path,
/// extended by the field when the message starts with one of `fields`.
fn prefixed(errs: &mut Vec<String>, path: &str, fields: &[&str], found: Vec<String>) {
    errs.extend(found.into_iter().map(|m| {
        let first = m.split(' ').next().unwrap_or_default();
        match fields.iter().find(|f| **f == first) {
            Some(f) => format!("{path}.{f}: {m}"),
            None => format!("{path}: {m}"),
        }
    }));
}

fn model_rules(errs: &mut Vec<String>, hidden: &[usize], embedding: usize, head: &[usize]) {
    if hidden.contains(&0) {
        errs.push("model.hidden_dims: widths must be positive".into());
    }
    if embedding == 0 {
        errs.push("model.embedding_dim: must be positive".into());
    }
    if head.contains(&0) {
        errs.push("model: head widths must be positive".into());
    }
}

fn schedule_rules(errs: &mut Vec<String>, epochs: usize, batch: usize, interval: usize, opt: &AdamConfig, items: usize) {
    let before = errs.len();
    if epochs == 0 {
        errs.push("train.epochs: must be positive".into());
    }
    if batch == 0 {
        errs.push("train.batch_size: must be positive".into());
    }
    if interval == 0 {
        errs.push("train.eval_interval: must be positive".into());
    }
    if !(opt.learning_rate > 0.0) {
        errs.push(format!("train.optimizer.learning_rate: must be positive (got {})", opt.learning_rate));
    }
    if !(opt.epsilon > 0.0) {
        errs.push(format!("train.optimizer.epsilon: must be positive (got {})", opt.epsilon));
    }
    for (name, b) in [("beta1", opt.beta1), ("beta2", opt.beta2)] {
        if !(0.0..1.0).contains(&b) {
            errs.push(format!("train.optimizer.{name}: must lie in [0, 1) (got {b})"));
        }
    }
    if errs.len() == before && items > 0 {
        let total = epochs * items.div_ceil(batch);
        if interval > total {
            errs.push(format!("train.eval_interval: {interval} exceeds the {total} total optimizer steps"));
        }
    }
}

/// Parse and fully validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| HarnessError::Invalid(vec![format!("<document>: not valid JSON: {e}")]))?;
    let Value::Object(map) = &value else {
        return Err(HarnessError::Invalid(vec!["<document>: expected a JSON object".into()]));
    };
    let kinds = ExperimentKind::ALL.map(|k| k.as_str()).join(", ");
    let kind = match map.get("experiment") {
        None => return Err(HarnessError::Invalid(vec![format!("experiment: required (one of {kinds})")])),
        Some(Value::String(s)) => match ExperimentKind::ALL.iter().find(|k| k.as_str() == s) {
            Some(k) => *k,
            None => return Err(HarnessError::Invalid(vec![format!("experiment: unknown kind {s:?} (one of {kinds})")])),
        },
        Some(other) => return Err(HarnessError::Invalid(vec![format!("experiment: expected a string, got {other}")])),
    };
    let reference = serde_json::to_value(ExperimentConfig::default_for(kind)).expect("defaults serialize");
    let mut errs = Vec::new();
    check_shape(&value, &reference, "", &mut errs);
    if !errs.is_empty() {
        return Err(HarnessError::Invalid(errs));
    }
    let config: ExperimentConfig = serde_json::from_value(value).map_err(|e| HarnessError::Invalid(vec![e.to_string()]))?;
    let errs = config.violations();
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(HarnessError::Invalid(errs))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text)
}

/// Walk `user` against the serialized defaults: unknown keys and JSON type
/// mismatches are reported with their paths. `null` in the reference (an
/// optional field) accepts anything; array elements are checked against
/// the reference's first element when there is one.
fn check_shape(user: &Value, reference: &Value, path: &str, errs: &mut Vec<String>) {
    let here = if path.is_empty() { "<document>" } else { path };
    match (reference, user) {
        (Value::Null, _) => {}
        (Value::Object(r), Value::Object(u)) => {
            for (key, v) in u {
                let child = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                match r.get(key) {
                    Some(rv) => check_shape(v, rv, &child, errs),
                    None => errs.push(format!("{child}: unknown key")),
                }
            }
        }
        (Value::Array(r), Value::Array(u)) => {
            if let Some(first) = r.first() {
                for (i, v) in u.iter().enumerate() {
                    check_shape(v, first, &format!("{here}[{i}]"), errs);
                }
            }
        }
        (Value::Number(r), Value::Number(u)) => {
            let integral = r.is_u64() || r.is_i64();
            if integral && !(u.is_u64() || u.is_i64()) {
                errs.push(format!("{here}: expected an integer, got {u}"));
            } else if integral && r.is_u64() && u.is_i64() && !u.is_u64() {
                errs.push(format!("{here}: expected a non-negative integer, got {u}"));
            }
        }
        (Value::String(_), Value::String(_)) | (Value::Bool(_), Value::Bool(_)) => {}
        (r, u) => errs.push(format!("{here}: expected {}, got {}", type_name(r), type_name(u))),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// `--out` wins, then the config's `output_dir`, then `$RELNET_OUT/<name>`,
/// then `runs/<name>`.
pub fn resolve_output_dir(config: &ExperimentConfig, cli_out: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = config.output_dir() {
        return PathBuf::from(p);
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(config.name()),
        _ => PathBuf::from("runs").join(config.name()),
    }
}
