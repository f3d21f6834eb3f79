use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Scalar objective over a set of parameter leaves.
pub trait ScalarFn: Fn(&mut Graph, &[Var]) -> Result<Var> {}
impl<F: Fn(&mut Graph, &[Var]) -> Result<Var>> ScalarFn for F {}

/// Evaluate `f` at `params` and return the loss value together with the
/// analytic gradient of every parameter.
pub fn value_and_grad(f: &impl ScalarFn, params: &[Tensor]) -> Result<(f64, Vec<Tensor>)> {
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let loss = f(&mut g, &vars)?;
    let value = g
        .value(loss)
        .item()
        .ok_or_else(|| Error::structural("finite_difference_check", "objective is not scalar"))?;
    let mut grads = g.backward(loss)?;
    let out = vars
        .iter()
        .zip(params)
        .map(|(v, p)| grads.take(*v).unwrap_or_else(|| Tensor::zeros(p.shape().to_vec())))
        .collect();
    Ok((value, out))
}

fn evaluate(f: &impl ScalarFn, params: &[Tensor]) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let loss = f(&mut g, &vars)?;
    g.value(loss)
        .item()
        .ok_or_else(|| Error::structural("finite_difference_check", "objective is not scalar"))
}

/// Largest relative disagreement between the analytic gradient and central
/// differences, over every entry of every parameter:
/// `|analytic - numeric| / max(1e-6, |analytic| + |numeric|)`.
///
/// The floor keeps entries whose true gradient is zero from being judged on
/// central-difference rounding noise (one ulp of the loss over `2 epsilon`).
pub fn finite_difference_check(f: impl ScalarFn, params: &[Tensor], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let (_, analytic) = value_and_grad(&f, params)?;
    let mut work: Vec<Tensor> = params.to_vec();
    let mut worst: f64 = 0.0;
    for p in 0..params.len() {
        for i in 0..params[p].len() {
            let orig = params[p].data()[i];
            work[p].data_mut()[i] = orig + epsilon;
            let up = evaluate(&f, &work)?;
            work[p].data_mut()[i] = orig - epsilon;
            let down = evaluate(&f, &work)?;
            work[p].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic[p].data()[i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(DENOMINATOR_FLOOR);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
