use proptest::prelude::*;
use rand::Rng as _;

use super::*;
use crate::autodiff::{finite_difference_check, Graph, Tensor, Var};
use crate::error::Error;
use crate::rng::rng_from_seed;

fn small_encoder(input: usize, hidden: Vec<usize>, emb: usize) -> EncoderSpec {
    EncoderSpec {
        input_dim: input,
        hidden_dims: hidden,
        embedding_dim: emb,
        activation: Activation::Relu,
    }
}

fn random_batch(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = rng_from_seed(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

fn perturb_biases(state: &mut ModelState, seed: u64) {
    let mut rng = rng_from_seed(seed);
    for (n, p) in state.names.iter().zip(state.params.iter_mut()) {
        if n.ends_with("bias") {
            for v in p.data_mut() {
                *v = rng.gen_range(-0.2..0.2);
            }
        }
    }
}

// Plain nested-loop forward pass used as an oracle.
fn oracle_mlp(layers: &[(&Tensor, &Tensor)], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, (w, b)) in layers.iter().enumerate() {
        let (inp, out) = w.dims2().unwrap();
        let mut z = vec![0.0; out];
        for j in 0..out {
            let mut s = b.data()[j];
            for i in 0..inp {
                s += h[i] * w.data()[i * out + j];
            }
            z[j] = if l + 1 < layers.len() { s.max(0.0) } else { s };
        }
        h = z;
    }
    h
}

fn layers_of(state: &ModelState, head: bool) -> Vec<(&Tensor, &Tensor)> {
    let enc = 2 * state.encoder_layers();
    let slice = if head { &state.params[enc..] } else { &state.params[..enc] };
    slice.chunks(2).map(|c| (&c[0], &c[1])).collect()
}

#[test]
fn relational_similarity_examples() {
    let a = Tensor::from_rows(&[[0.0, 0.0]]).unwrap();
    let b = Tensor::from_rows(&[[3.0, 4.0]]).unwrap();
    let s = relational_similarity(&a, &b).unwrap();
    assert!((s[0] - (-5.0f64).exp()).abs() < 1e-15);
    let same = relational_similarity(&b, &b).unwrap();
    assert_eq!(same[0], 1.0);
    let wrong = Tensor::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
    assert!(matches!(relational_similarity(&a, &wrong), Err(Error::Structural { .. })));
}

#[test]
fn cosine_bottleneck_range() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::from_rows(&[[1.0, 0.0], [1.0, 1.0], [2.0, 0.0]]).unwrap());
    let b = g.constant(Tensor::from_rows(&[[-1.0, 0.0], [1.0, 1.0], [0.0, 3.0]]).unwrap());
    let s = bottleneck_graph(&mut g, a, b, BottleneckMetric::Cosine).unwrap();
    let v = g.value(s).data();
    assert!(v[0].abs() < 1e-9);
    assert!((v[1] - 1.0).abs() < 1e-9);
    assert!((v[2] - 0.5).abs() < 1e-9);
}

#[test]
fn linear_bottleneck_values() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]).unwrap());
    let b = g.constant(Tensor::from_rows(&[[0.3, 0.4], [1.0, 1.0], [3.0, 4.0]]).unwrap());
    let s = bottleneck_graph(&mut g, a, b, BottleneckMetric::EuclideanLinear).unwrap();
    let v = g.value(s).data();
    assert!((v[0] - 0.5).abs() < 1e-15);
    assert_eq!(v[1], 1.0);
    assert!((v[2] + 4.0).abs() < 1e-15);
}

#[test]
fn gradcheck_relational_metric_variants() {
    let xa = random_batch(3, 5, 71);
    let xb = random_batch(3, 5, 72);
    let target = Tensor::new(vec![3, 1], vec![0.9, 0.2, 0.5]).unwrap();
    for metric in [BottleneckMetric::EuclideanLinear, BottleneckMetric::Cosine] {
        let mut spec = ModelSpec::relational(small_encoder(5, vec![4], 3));
        spec.metric = metric;
        let mut state = init_parameters(&spec, 7).unwrap();
        perturb_biases(&mut state, 7);
        let f = pair_mse_fn(spec.clone(), xa.clone(), xb.clone(), target.clone());
        let err = finite_difference_check(f, &state.params, 1e-5).unwrap();
        assert!(err <= 1e-4, "{metric:?}: {err}");
    }
}

#[test]
fn encoder_matches_nested_loop_oracle() {
    let spec = ModelSpec::relational(small_encoder(6, vec![5, 4], 3));
    let mut state = init_parameters(&spec, 11).unwrap();
    perturb_biases(&mut state, 3);
    let x = random_batch(4, 6, 5);
    let e = encode(&state, &x).unwrap();
    let layers = layers_of(&state, false);
    for r in 0..4 {
        let want = oracle_mlp(&layers, x.row(r));
        for (a, b) in e.row(r).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn feedforward_matches_oracle() {
    let spec = ModelSpec::feedforward(small_encoder(5, vec![4], 3), vec![6]);
    let mut state = init_parameters(&spec, 2).unwrap();
    perturb_biases(&mut state, 9);
    let xa = random_batch(3, 5, 1);
    let xb = random_batch(3, 5, 2);
    let got = predict_pairs(&state, &xa, &xb).unwrap();
    let enc = layers_of(&state, false);
    let head = layers_of(&state, true);
    for r in 0..3 {
        let mut cat = oracle_mlp(&enc, xa.row(r));
        cat.extend(oracle_mlp(&enc, xb.row(r)));
        let z = oracle_mlp(&head, &cat)[0];
        let want = 1.0 / (1.0 + (-z).exp());
        assert!((got[r] - want).abs() < 1e-12);
    }
}

#[test]
fn relational_is_symmetric_on_many_pairs() {
    let spec = ModelSpec::relational(small_encoder(8, vec![6], 4));
    let state = init_parameters(&spec, 21).unwrap();
    let xa = random_batch(1000, 8, 1);
    let xb = random_batch(1000, 8, 2);
    let ab = predict_pairs(&state, &xa, &xb).unwrap();
    let ba = predict_pairs(&state, &xb, &xa).unwrap();
    assert_eq!(ab, ba);
    assert!(ab.iter().all(|&s| s > 0.0 && s <= 1.0));
}

#[test]
fn feedforward_output_in_unit_interval_and_generally_asymmetric() {
    let spec = ModelSpec::feedforward(small_encoder(8, vec![6], 4), vec![5]);
    let state = init_parameters(&spec, 4).unwrap();
    let xa = random_batch(50, 8, 3);
    let xb = random_batch(50, 8, 4);
    let ab = predict_pairs(&state, &xa, &xb).unwrap();
    let ba = predict_pairs(&state, &xb, &xa).unwrap();
    assert!(ab.iter().all(|&s| s > 0.0 && s < 1.0));
    assert!(ab.iter().zip(&ba).any(|(x, y)| (x - y).abs() > 1e-9));
}

#[test]
fn init_is_deterministic_with_zero_biases() {
    let spec = ModelSpec::feedforward(EncoderSpec::default_for_canvas(16), vec![32]);
    let a = init_parameters(&spec, 7).unwrap();
    let b = init_parameters(&spec, 7).unwrap();
    let c = init_parameters(&spec, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.params, c.params);
    for (n, p) in a.names.iter().zip(&a.params) {
        if n.ends_with("bias") {
            assert!(p.data().iter().all(|&v| v == 0.0));
        } else {
            let (i, o) = p.dims2().unwrap();
            let limit = (6.0 / (i + o) as f64).sqrt();
            let mean = p.data().iter().sum::<f64>() / p.len() as f64;
            // U(-l, l) has sd l/sqrt(3); the mean of n draws has sd l/sqrt(3n).
            let sd_mean = limit / (3.0 * p.len() as f64).sqrt();
            assert!(mean.abs() < 3.0 * sd_mean, "{n}: mean {mean}");
            assert!(p.data().iter().all(|v| v.abs() < limit));
        }
    }
}

#[test]
fn encoder_weights_are_shared_between_twins() {
    // Gradient of the encoder weights must combine both pathways.
    let spec = ModelSpec::relational(small_encoder(4, vec![3], 2));
    let state = init_parameters(&spec, 1).unwrap();
    let xa = random_batch(1, 4, 1);
    let xb = random_batch(1, 4, 2);
    let grad_with = |a: &Tensor, b: &Tensor| {
        let mut g = Graph::new();
        let m = state.bind(&mut g);
        let va = g.constant(a.clone());
        let vb = g.constant(b.clone());
        let s = predict_pairs_graph(&mut g, &m, va, vb).unwrap();
        let l = g.sum(s).unwrap();
        let mut grads = g.backward(l).unwrap();
        m.gradients(&mut grads)
    };
    let both = grad_with(&xa, &xb);
    assert_eq!(state.names.len(), 4);
    assert!(both.iter().all(Option::is_some));
    let swapped = grad_with(&xb, &xa);
    for (p, q) in both.iter().zip(&swapped) {
        let (p, q) = (p.as_ref().unwrap(), q.as_ref().unwrap());
        for (x, y) in p.data().iter().zip(q.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn batch_order_does_not_change_per_pair_output() {
    let spec = ModelSpec::feedforward(small_encoder(6, vec![5], 3), vec![4]);
    let state = init_parameters(&spec, 3).unwrap();
    let xa = random_batch(5, 6, 1);
    let xb = random_batch(5, 6, 2);
    let fwd = predict_pairs(&state, &xa, &xb).unwrap();
    let rev = |t: &Tensor| Tensor::from_rows(&t.rows().collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>()).unwrap();
    let bwd = predict_pairs(&state, &rev(&xa), &rev(&xb)).unwrap();
    for i in 0..5 {
        assert!((fwd[i] - bwd[4 - i]).abs() < 1e-12);
    }
}

fn pair_mse_fn(
    spec: ModelSpec,
    xa: Tensor,
    xb: Tensor,
    target: Tensor,
) -> impl Fn(&mut Graph, &[Var]) -> crate::Result<Var> {
    move |g: &mut Graph, vars: &[Var]| {
        let enc = spec.encoder.layer_dims().len();
        let pairs = |v: &[Var]| v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
        let m = BoundModel {
            kind: spec.kind,
            metric: spec.metric,
            encoder: pairs(&vars[..2 * enc]),
            head: pairs(&vars[2 * enc..]),
            vars: vars.to_vec(),
        };
        let a = g.constant(xa.clone());
        let b = g.constant(xb.clone());
        let t = g.constant(target.clone());
        let s = predict_pairs_graph(g, &m, a, b)?;
        let d = g.sub(s, t)?;
        let d = g.square(d)?;
        g.mean(d)
    }
}

#[test]
fn gradcheck_relational_and_feedforward_random_configs() {
    let configs = [(5, vec![4], 3), (7, vec![6, 4], 2), (4, vec![], 3)];
    for (k, (input, hidden, emb)) in configs.into_iter().enumerate() {
        let seed = 100 + k as u64;
        let xa = random_batch(3, input, seed);
        let xb = random_batch(3, input, seed + 50);
        let target = Tensor::new(vec![3, 1], vec![0.9, 0.2, 0.5]).unwrap();
        for spec in [
            ModelSpec::relational(small_encoder(input, hidden.clone(), emb)),
            ModelSpec::feedforward(small_encoder(input, hidden.clone(), emb), vec![3]),
        ] {
            let mut state = init_parameters(&spec, seed).unwrap();
            perturb_biases(&mut state, seed);
            let f = pair_mse_fn(spec.clone(), xa.clone(), xb.clone(), target.clone());
            let err = finite_difference_check(f, &state.params, 1e-5).unwrap();
            assert!(err <= 1e-4, "{:?} config {k}: {err}", spec.kind);
        }
    }
}

#[test]
fn gradcheck_contrastive_random_configs() {
    let configs = [(5, vec![4], 3, 3), (6, vec![5, 4], 3, 2), (4, vec![], 2, 4)];
    for (k, (input, hidden, emb, proj)) in configs.into_iter().enumerate() {
        let seed = 200 + k as u64;
        let spec = ModelSpec::contrastive(small_encoder(input, hidden, emb), vec![4], proj);
        let mut state = init_parameters(&spec, seed).unwrap();
        perturb_biases(&mut state, seed);
        let x = random_batch(6, input, seed);
        let sp = spec.clone();
        let f = move |g: &mut Graph, vars: &[Var]| {
            let enc = sp.encoder.layer_dims().len();
            let pairs = |v: &[Var]| v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
            let m = BoundModel {
                kind: sp.kind,
                metric: sp.metric,
                encoder: pairs(&vars[..2 * enc]),
                head: pairs(&vars[2 * enc..]),
                vars: vars.to_vec(),
            };
            let xv = g.constant(x.clone());
            contrastive_model_loss_graph(g, &m, xv, 0.5)
        };
        let err = finite_difference_check(f, &state.params, 1e-5).unwrap();
        assert!(err <= 1e-4, "contrastive config {k}: {err}");
    }
}

#[test]
fn nt_xent_two_orthogonal_pairs() {
    // Positives identical, negatives orthogonal, temperature 1:
    // loss = -log(e / (e + 2)).
    let z = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let l = contrastive_loss(&z, 1.0).unwrap();
    let e = std::f64::consts::E;
    let want = -(e / (e + 2.0)).ln();
    assert!((l - want).abs() < 1e-6, "{l} vs {want}");
    assert!((want - 0.5514).abs() < 1e-4);
}

#[test]
fn nt_xent_needs_two_pairs() {
    let z = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert!(matches!(contrastive_loss(&z, 0.5), Err(Error::Validation(_))));
    let odd = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(matches!(contrastive_loss(&odd, 0.5), Err(Error::Structural { .. })));
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let spec = ModelSpec::relational(small_encoder(2, vec![], 2));
    let mut state = init_parameters(&spec, 0).unwrap();
    let before = state.params.clone();
    let config = AdamConfig {
        learning_rate: 0.1,
        ..AdamConfig::default()
    };
    let mut opt = OptimizerState::new(&state, config);
    let grads: Vec<Option<Tensor>> = state.params.iter().map(|p| Some(Tensor::full(p.shape().to_vec(), 1.0))).collect();
    optimizer_step(&mut opt, &mut state, &grads).unwrap();
    for (a, b) in state.params.iter().zip(&before) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y + 0.1).abs() < 1e-6);
        }
    }
    assert_eq!(state.step_count, 1);
}

#[test]
fn adam_rejects_missing_gradient_without_touching_state() {
    let spec = ModelSpec::relational(small_encoder(2, vec![], 2));
    let mut state = init_parameters(&spec, 0).unwrap();
    let before = state.clone();
    let mut opt = OptimizerState::new(&state, AdamConfig::default());
    let mut grads: Vec<Option<Tensor>> = state.params.iter().map(|p| Some(Tensor::zeros(p.shape().to_vec()))).collect();
    grads[1] = None;
    let err = optimizer_step(&mut opt, &mut state, &grads).unwrap_err();
    assert!(matches!(err, Error::Structural { .. }));
    assert!(err.to_string().contains("encoder.0.bias"));
    assert_eq!(state, before);
    assert_eq!(opt.step, 0);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let spec = ModelSpec::contrastive(small_encoder(9, vec![7], 4), vec![5], 3);
    let mut state = init_parameters(&spec, 5).unwrap();
    perturb_biases(&mut state, 1);
    state.step_count = 42;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&state, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, state);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes, encode_checkpoint(&back).unwrap());
}

#[test]
fn checkpoint_detects_corruption() {
    let spec = ModelSpec::relational(small_encoder(3, vec![2], 2));
    let state = init_parameters(&spec, 5).unwrap();
    let bytes = encode_checkpoint(&state).unwrap();
    let mut flipped = bytes.clone();
    let n = flipped.len();
    flipped[n - 40] ^= 1;
    assert!(matches!(decode_checkpoint(&flipped), Err(Error::Checkpoint(_))));
    assert!(matches!(decode_checkpoint(&bytes[..n - 1]), Err(Error::Checkpoint(_))));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(decode_checkpoint(&magic), Err(Error::Checkpoint(_))));
}

#[test]
fn spec_validation() {
    let mut spec = ModelSpec::relational(small_encoder(3, vec![2], 1));
    assert!(spec.validate().is_err());
    spec.encoder.embedding_dim = 2;
    assert!(spec.validate().is_ok());
    spec.head = Some(HeadSpec {
        hidden_dims: vec![],
        output_dim: 1,
    });
    assert!(spec.validate().is_err());
    let ff = ModelSpec::feedforward(small_encoder(3, vec![2], 2), vec![0]);
    assert!(ff.validate().is_err());
}

proptest! {
    #[test]
    fn relational_similarity_symmetric_and_bounded(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let ta = Tensor::new(vec![1, 4], a).unwrap();
        let tb = Tensor::new(vec![1, 4], b).unwrap();
        let ab = relational_similarity(&ta, &tb).unwrap()[0];
        let ba = relational_similarity(&tb, &ta).unwrap()[0];
        prop_assert_eq!(ab, ba);
        prop_assert!(ab > 0.0 && ab <= 1.0);
    }
}
