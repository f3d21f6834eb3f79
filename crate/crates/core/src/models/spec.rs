use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Shared encoder, parameter-free distance bottleneck.
    Relational,
    /// Shared encoder, concatenated embeddings, MLP head with sigmoid output.
    Feedforward,
    /// Shared encoder plus projection head, trained with NT-Xent.
    Contrastive,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Relational => "relational",
            ModelKind::Feedforward => "feedforward",
            ModelKind::Contrastive => "contrastive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Distance and distance-to-similarity mapping of the relational bottleneck.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BottleneckMetric {
    /// `exp(-|a - b|)`
    #[default]
    Euclidean,
    /// `(1 + cos(a, b)) / 2`
    Cosine,
    /// `1 - |a - b|`: similarity linear in distance, for targets that are
    /// themselves linear in a latent distance.
    #[serde(rename = "euclidean_linear")]
    EuclideanLinear,
}

/// MLP encoder: ReLU hidden layers, linear embedding layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    #[serde(default = "relu")]
    pub activation: Activation,
}

fn relu() -> Activation {
    Activation::Relu
}

impl EncoderSpec {
    /// 1024 -> 256 -> 64 -> 32 for 32x32 images.
    pub fn default_for_canvas(canvas: usize) -> Self {
        EncoderSpec {
            input_dim: canvas * canvas,
            hidden_dims: vec![256, 64],
            embedding_dim: 32,
            activation: Activation::Relu,
        }
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.embedding_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// MLP head: ReLU hidden layers then an output layer. The feedforward head
/// ends in a single sigmoid unit; the contrastive projection head is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub encoder: EncoderSpec,
    pub head: Option<HeadSpec>,
    #[serde(default)]
    pub metric: BottleneckMetric,
}

impl ModelSpec {
    pub fn relational(encoder: EncoderSpec) -> Self {
        ModelSpec {
            kind: ModelKind::Relational,
            encoder,
            head: None,
            metric: BottleneckMetric::Euclidean,
        }
    }

    /// Head input is the concatenation of both embeddings.
    pub fn feedforward(encoder: EncoderSpec, hidden_dims: Vec<usize>) -> Self {
        ModelSpec {
            kind: ModelKind::Feedforward,
            encoder,
            head: Some(HeadSpec {
                hidden_dims,
                output_dim: 1,
            }),
            metric: BottleneckMetric::Euclidean,
        }
    }

    pub fn contrastive(encoder: EncoderSpec, hidden_dims: Vec<usize>, projection_dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Contrastive,
            encoder,
            head: Some(HeadSpec {
                hidden_dims,
                output_dim: projection_dim,
            }),
            metric: BottleneckMetric::Euclidean,
        }
    }

    pub fn head_dims(&self) -> Vec<(usize, usize)> {
        let Some(head) = &self.head else { return Vec::new() };
        let input = match self.kind {
            ModelKind::Feedforward => 2 * self.encoder.embedding_dim,
            _ => self.encoder.embedding_dim,
        };
        let mut dims = vec![input];
        dims.extend(&head.hidden_dims);
        dims.push(head.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let e = &self.encoder;
        if e.input_dim == 0 || e.hidden_dims.iter().any(|&d| d == 0) {
            errs.push("encoder dimensions must be >= 1".to_string());
        }
        if e.embedding_dim < 2 {
            errs.push(format!("embedding_dim must be >= 2 (got {})", e.embedding_dim));
        }
        match (self.kind, &self.head) {
            (ModelKind::Relational, Some(_)) => errs.push("relational model takes no head".into()),
            (ModelKind::Feedforward, None) | (ModelKind::Contrastive, None) => {
                errs.push(format!("{} model needs a head", self.kind.as_str()))
            }
            (ModelKind::Feedforward, Some(h)) if h.output_dim != 1 => {
                errs.push("feedforward head must end in one unit".into())
            }
            _ => {}
        }
        if let Some(h) = &self.head {
            if h.output_dim == 0 || h.hidden_dims.iter().any(|&d| d == 0) {
                errs.push("head dimensions must be >= 1".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs.join("; ")))
        }
    }
}
