use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::spec::{ModelKind, ModelSpec};
use crate::autodiff::{GradientMap, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Trainable parameters in declaration order: encoder layers first
/// (`encoder.L.weight` `[in, out]`, `encoder.L.bias` `[1, out]`), then head
/// layers. Both twin pathways bind the same encoder tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub params: Vec<Tensor>,
    pub step_count: u64,
}

impl ModelState {
    pub fn encoder_layers(&self) -> usize {
        self.spec.encoder.layer_dims().len()
    }

    pub fn head_layers(&self) -> usize {
        self.spec.head_dims().len()
    }

    pub fn head_param_count(&self) -> usize {
        self.params[2 * self.encoder_layers()..].iter().map(Tensor::len).sum()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Insert every parameter into `g` as a trainable leaf.
    pub fn bind(&self, g: &mut Graph) -> BoundModel {
        self.bind_with(g, true)
    }

    /// Insert parameters as constants (evaluation only).
    pub fn bind_frozen(&self, g: &mut Graph) -> BoundModel {
        self.bind_with(g, false)
    }

    fn bind_with(&self, g: &mut Graph, trainable: bool) -> BoundModel {
        let vars: Vec<Var> = self.params.iter().map(|p| g.leaf(p.clone(), trainable)).collect();
        BoundModel::from_vars(&self.spec, vars)
    }
}

/// Parameter leaves of one model inside one graph.
#[derive(Clone, Debug)]
pub struct BoundModel {
    pub kind: ModelKind,
    pub metric: super::spec::BottleneckMetric,
    pub encoder: Vec<(Var, Var)>,
    pub head: Vec<(Var, Var)>,
    pub vars: Vec<Var>,
}

impl BoundModel {
    /// Group leaves already in a graph (weight, bias, weight, ...; encoder
    /// first) into a model of `spec`.
    pub fn from_vars(spec: &ModelSpec, vars: Vec<Var>) -> BoundModel {
        let enc = spec.encoder.layer_dims().len();
        let layers = |range: &[Var]| range.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
        BoundModel {
            kind: spec.kind,
            metric: spec.metric,
            encoder: layers(&vars[..2 * enc]),
            head: layers(&vars[2 * enc..]),
            vars,
        }
    }

    /// Gradients aligned with the parameter order; `None` where a parameter
    /// did not reach the loss.
    pub fn gradients(&self, grads: &mut GradientMap) -> Vec<Option<Tensor>> {
        self.vars.iter().map(|v| grads.take(*v)).collect()
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_parameters(spec: &ModelSpec, seed: u64) -> Result<ModelState> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut names = Vec::new();
    let mut params = Vec::new();
    let mut add_layers = |prefix: &str, dims: Vec<(usize, usize)>, rng: &mut crate::rng::Rng| {
        for (l, (fan_in, fan_out)) in dims.into_iter().enumerate() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect();
            names.push(format!("{prefix}.{l}.weight"));
            params.push(Tensor::from_parts(vec![fan_in, fan_out], w));
            names.push(format!("{prefix}.{l}.bias"));
            params.push(Tensor::zeros(vec![1, fan_out]));
        }
    };
    add_layers("encoder", spec.encoder.layer_dims(), &mut rng);
    add_layers("head", spec.head_dims(), &mut rng);
    Ok(ModelState {
        spec: spec.clone(),
        names,
        params,
        step_count: 0,
    })
}

/// Dense layer stack: ReLU between layers, nothing after the last.
pub fn mlp(g: &mut Graph, layers: &[(Var, Var)], x: Var) -> Result<Var> {
    let mut h = x;
    for (i, &(w, b)) in layers.iter().enumerate() {
        let z = g.matmul(h, w)?;
        h = g.add(z, b)?;
        if i + 1 < layers.len() {
            h = g.relu(h)?;
        }
    }
    Ok(h)
}

/// Embeddings `[batch, embedding_dim]` for inputs `[batch, input_dim]`.
pub fn encode_graph(g: &mut Graph, model: &BoundModel, x: Var) -> Result<Var> {
    let cols = g.value(x).dims2().map(|d| d.1);
    let expected = g.value(model.encoder[0].0).dims2().map(|d| d.0);
    if cols != expected {
        return Err(Error::structural(
            "encode",
            format!("input shape {:?} does not match encoder input {:?}", g.value(x).shape(), expected),
        ));
    }
    mlp(g, &model.encoder, x)
}

/// Forward pass without recording gradients.
pub fn encode(state: &ModelState, batch: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let model = state.bind_frozen(&mut g);
    let x = g.constant(batch.clone());
    let e = encode_graph(&mut g, &model, x)?;
    Ok(g.value(e).clone())
}

/// Stack flat rows into a `[rows, dim]` tensor.
pub fn batch_from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Tensor> {
    Tensor::from_rows(rows)
}
