use serde::{Deserialize, Serialize};

use super::state::ModelState;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments mirroring the parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new(state: &ModelState, config: AdamConfig) -> Self {
        let zeros = || state.params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        OptimizerState {
            config,
            step: 0,
            first_moment: zeros(),
            second_moment: zeros(),
        }
    }
}

/// One bias-corrected Adam update. Every parameter needs a gradient.
pub fn optimizer_step(opt: &mut OptimizerState, state: &mut ModelState, grads: &[Option<Tensor>]) -> Result<()> {
    if grads.len() != state.params.len() {
        return Err(Error::structural(
            "optimizer_step",
            format!("{} gradients for {} parameters", grads.len(), state.params.len()),
        ));
    }
    for (i, (g, p)) in grads.iter().zip(&state.params).enumerate() {
        match g {
            None => {
                return Err(Error::structural(
                    "optimizer_step",
                    format!("missing gradient for {}", state.names[i]),
                ))
            }
            Some(g) if g.shape() != p.shape() => {
                return Err(Error::structural(
                    "optimizer_step",
                    format!("gradient shape {:?} for {} {:?}", g.shape(), state.names[i], p.shape()),
                ))
            }
            _ => {}
        }
    }
    let c = opt.config;
    opt.step += 1;
    let t = opt.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        let g = g.as_ref().expect("checked above").data();
        let m = opt.first_moment[i].data_mut();
        let v = opt.second_moment[i].data_mut();
        let p = state.params[i].data_mut();
        for k in 0..g.len() {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            p[k] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
    state.step_count += 1;
    Ok(())
}
