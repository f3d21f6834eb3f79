use super::*;
use crate::autodiff::Tensor;
use crate::error::Error;
use crate::models::{init_parameters, Activation, AdamConfig, EncoderSpec, ModelSpec};
use crate::stimuli::{
    build_onehot_dataset, build_quadrilateral_catalog, build_similarity_pairs, build_trial_set, CategoricalPair,
    PairConfig, PairDataset, Split, TrialConfig,
};

fn small_pairs() -> PairDataset {
    let cfg = PairConfig {
        grid: 5,
        canvas: 16,
        eval_pairs: 64,
        ..Default::default()
    };
    build_similarity_pairs(&cfg, 1).unwrap()
}

fn encoder(input: usize) -> EncoderSpec {
    EncoderSpec {
        input_dim: input,
        hidden_dims: vec![16],
        embedding_dim: 4,
        activation: Activation::Relu,
    }
}

fn config(model: ModelSpec, epochs: usize) -> TrainConfig {
    TrainConfig {
        model,
        epochs,
        batch_size: 16,
        eval_interval: 5,
        seed: 3,
        optimizer: AdamConfig::default(),
    }
}

#[test]
fn identical_pair_targets_are_fit_quickly() {
    let mut data = small_pairs();
    data.train.retain(|p| p.a == p.b);
    assert!(data.train.iter().all(|p| p.target == 1.0));
    let mut cfg = config(ModelSpec::relational(encoder(256)), 200);
    cfg.batch_size = data.train.len();
    let trace = train_similarity(&cfg, &data).unwrap();
    assert_eq!(trace.step_losses.len(), 200);
    assert!(trace.evals.last().unwrap().train_loss < 1e-3);
}

#[test]
fn similarity_training_is_deterministic_and_prefix_stable() {
    let data = small_pairs();
    for model in [
        ModelSpec::relational(encoder(256)),
        ModelSpec::feedforward(encoder(256), vec![8]),
    ] {
        let short = train_similarity(&config(model.clone(), 1), &data).unwrap();
        let again = train_similarity(&config(model.clone(), 1), &data).unwrap();
        assert_eq!(short.evals, again.evals);
        assert_eq!(short.step_losses, again.step_losses);
        assert_eq!(short.final_state, again.final_state);

        let long = train_similarity(&config(model, 2), &data).unwrap();
        assert_eq!(&long.step_losses[..short.step_losses.len()], &short.step_losses[..]);
        for e in &short.evals {
            // the short run's final eval may fall off the long run's grid
            if let Some(l) = long.eval_at(e.step) {
                assert_eq!(l, e);
            }
        }
        assert!(long.evals.windows(2).all(|w| w[0].step < w[1].step));
        assert!(long.step_losses.iter().all(|l| l.is_finite()));
        assert_eq!(long.heldout_gradient_touches, 0);
        assert_eq!(long.epoch_seconds.len(), 2);
    }
}

#[test]
fn trace_csv_layout() {
    let data = small_pairs();
    let trace = train_similarity(&config(ModelSpec::relational(encoder(256)), 1), &data).unwrap();
    let csv = trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,train_loss,id_metric,ood_metric"));
    assert_eq!(lines.count(), trace.evals.len());
    assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn settled_step_requires_staying_below() {
    let data = small_pairs();
    let mut trace = train_similarity(&config(ModelSpec::relational(encoder(256)), 1), &data).unwrap();
    let losses = [0.5, 0.05, 0.2, 0.04, 0.03];
    trace.evals = losses
        .iter()
        .enumerate()
        .map(|(i, &l)| EvalPoint {
            step: 10 * i as u64,
            train_loss: l,
            id_metric: None,
            ood_metric: None,
        })
        .collect();
    assert_eq!(trace.first_step_where(|e| e.train_loss < 0.1), Some(10));
    assert_eq!(trace.settled_step(|e| e.train_loss < 0.1), Some(30));
    assert_eq!(trace.settled_step(|e| e.train_loss < 0.01), None);
    assert_eq!(trace.settled_step(|e| e.train_loss < 1.0), Some(0));
}

#[test]
fn divergence_reports_last_finite_step() {
    let mut data = small_pairs();
    let victim = data.train[0].a;
    for p in &mut data.stimuli[victim].image.pixels {
        *p = 1e308;
    }
    let mut cfg = config(ModelSpec::relational(encoder(256)), 1);
    cfg.batch_size = data.train.len();
    cfg.eval_interval = 1;
    match train_similarity(&cfg, &data) {
        Err(Error::Divergence {
            step,
            last_finite_step,
            ..
        }) => {
            assert_eq!(step, 1);
            assert_eq!(last_finite_step, None);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn config_violations_are_collected() {
    let mut cfg = config(ModelSpec::relational(encoder(256)), 1);
    cfg.batch_size = 0;
    cfg.optimizer.learning_rate = -1.0;
    let errs = cfg.violations(10);
    assert_eq!(errs.len(), 2, "{errs:?}");
    let mut cfg = config(ModelSpec::relational(encoder(256)), 1);
    cfg.eval_interval = 1000;
    assert!(cfg.validate(10).is_err());
}

#[test]
fn wrong_model_kind_is_rejected() {
    let data = small_pairs();
    let cfg = config(ModelSpec::contrastive(encoder(256), vec![4], 3), 1);
    assert!(matches!(train_similarity(&cfg, &data), Err(Error::Validation(_))));
}

#[test]
fn prediction_of_exactly_half_counts_as_different() {
    let data = build_onehot_dataset(4, 4, 0).unwrap();
    let spec = ModelSpec::feedforward(encoder(8), vec![3]);
    let mut state = init_parameters(&spec, 0).unwrap();
    let head_start = 2 * state.encoder_layers();
    for p in &mut state.params[head_start..] {
        p.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let emb = embed_all(&state, &(0..16).map(|i| data.encoding(i)).collect::<Vec<_>>()).unwrap();
    let same = CategoricalPair {
        a: 0,
        b: 0,
        target: 1.0,
        split: Split::Train,
    };
    let diff = CategoricalPair {
        a: 0,
        b: 5,
        target: 0.0,
        split: Split::Train,
    };
    assert_eq!(pair_predictions(&state, &emb, &[(0, 0)]).unwrap(), vec![0.5]);
    assert_eq!(categorical_accuracy(&state, &emb, &[same]).unwrap(), 0.0);
    assert_eq!(categorical_accuracy(&state, &emb, &[diff]).unwrap(), 1.0);
}

#[test]
fn categorical_training_reports_accuracies() {
    let data = build_onehot_dataset(6, 8, 2).unwrap();
    let cfg = TrainConfig {
        batch_size: 8,
        ..config(ModelSpec::relational(encoder(12)), 3)
    };
    for targets in [CategoricalTargets::Graded, CategoricalTargets::SameDifferent] {
        let out = train_categorical(&cfg, &data, targets).unwrap();
        let last = out.trace.evals.last().unwrap();
        assert_eq!(Some(out.train_accuracy), last.id_metric);
        assert_eq!(Some(out.holdout_accuracy), last.ood_metric);
        assert!((0.0..=1.0).contains(&out.holdout_accuracy));
        assert_eq!(out.trace.heldout_gradient_touches, 0);
    }
}

#[test]
fn same_different_targets_binarize_at_same_target() {
    let t = CategoricalTargets::SameDifferent;
    assert_eq!((t.fit_target(1.0), t.fit_target(0.5), t.fit_target(0.0)), (1.0, 0.0, 0.0));
    assert_eq!(CategoricalTargets::Graded.fit_target(0.5), 0.5);
}

fn oddball_data() -> OddballData {
    let catalog = build_quadrilateral_catalog();
    let cfg = TrialConfig {
        canvas: 16,
        ..Default::default()
    };
    OddballData {
        train: build_trial_set(&catalog, 40, &cfg, 1, "train").unwrap(),
        eval: build_trial_set(&catalog, 20, &cfg, 1, "eval").unwrap(),
    }
}

#[test]
fn oddball_arms_keep_configured_checkpoints() {
    let data = oddball_data();
    for model in [
        ModelSpec::relational(encoder(256)),
        ModelSpec::contrastive(encoder(256), vec![8], 4),
    ] {
        let cfg = OddballTrainConfig {
            train: TrainConfig {
                batch_size: 8,
                eval_interval: 5,
                ..config(model, 2)
            },
            temperature: 0.5,
            checkpoint_fractions: vec![0.5, 1.0],
            probe_trials: 16,
        };
        let trace = train_oddball_encoders(&cfg, &data).unwrap();
        assert_eq!(trace.checkpoints.len(), 2);
        assert_eq!(trace.checkpoints[1], trace.final_state);
        assert_eq!(trace.checkpoints[0].step_count, 5);
        let acc = trace.evals.last().unwrap().id_metric.unwrap();
        assert!((0.0..=1.0).contains(&acc));
        let again = train_oddball_encoders(&cfg, &data).unwrap();
        assert_eq!(trace.evals, again.evals);
    }
}

#[test]
fn oddball_rejects_feedforward_and_bad_fractions() {
    let data = oddball_data();
    let mut cfg = OddballTrainConfig {
        train: config(ModelSpec::feedforward(encoder(256), vec![4]), 1),
        temperature: 0.5,
        checkpoint_fractions: vec![1.0],
        probe_trials: 4,
    };
    assert!(train_oddball_encoders(&cfg, &data).is_err());
    cfg.train.model = ModelSpec::relational(encoder(256));
    cfg.checkpoint_fractions = vec![1.5];
    assert!(train_oddball_encoders(&cfg, &data).is_err());
}

#[test]
fn trial_embeddings_are_trial_major() {
    let data = oddball_data();
    let state = init_parameters(&ModelSpec::relational(encoder(256)), 0).unwrap();
    let emb = trial_embeddings(&state, &data.eval[..2]).unwrap();
    assert_eq!(emb.shape(), &[12, 4]);
    let one = crate::models::encode(&state, &Tensor::new(vec![1, 256], data.eval[1].images[2].pixels.clone()).unwrap()).unwrap();
    assert_eq!(emb.row(8), one.row(0));
}
