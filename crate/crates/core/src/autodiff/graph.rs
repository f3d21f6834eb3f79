//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] is an append-only arena of nodes. Node identifiers increase
//! monotonically, so every node's operands have smaller identifiers and the
//! arena order is already a topological order. A graph is built for one
//! forward pass, differentiated once, and dropped.
//!
//! Shape rules:
//!
//! | primitive    | operands                      | result                    |
//! |--------------|-------------------------------|---------------------------|
//! | `matmul`     | `[m,k]·[k,n]`, `[m,k]·[k]`, or `[m,k]·[n,k]ᵀ` when transposed | `[m,n]` / `[m]` |
//! | `add/sub/multiply` | rhs equal shape, scalar `[1]`, row `[1,n]`/`[n]`, or column `[m,1]` against lhs `[m,n]` | lhs shape |
//! | elementwise  | any                           | same shape                |
//! | `sum/mean`   | all entries, or one axis of a 2-D tensor | `[1]`, `[1,n]` or `[m,1]` |
//! | `concat`     | 2-D tensors agreeing off-axis | stacked along axis        |
//! | `softmax_row`| 2-D (or 1-D as one row)       | same shape                |
//!
//! Reductions accumulate left to right in row-major order.

use std::collections::BTreeMap;

use super::kernels::{matmul_nn, matmul_nt, matmul_tn};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Identifier of a node; doubles as its position in the arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reduction {
    All,
    /// Reduce a 2-D tensor along axis 0 (`[1,n]`) or axis 1 (`[m,1]`).
    Axis(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    MatMul { rhs_transposed: bool },
    Add,
    Sub,
    Multiply,
    Relu,
    Sigmoid,
    Square,
    /// The derivative at 0 is taken as 0.
    Sqrt,
    Sum(Reduction),
    Mean(Reduction),
    Concat { axis: usize },
    Scale(f64),
    Exp,
    Log,
    SoftmaxRow,
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::MatMul { .. } => "matmul",
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Multiply => "multiply",
            Primitive::Relu => "relu",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Square => "square",
            Primitive::Sqrt => "sqrt",
            Primitive::Sum(_) => "sum",
            Primitive::Mean(_) => "mean",
            Primitive::Concat { .. } => "concat",
            Primitive::Scale(_) => "scale",
            Primitive::Exp => "exp",
            Primitive::Log => "log",
            Primitive::SoftmaxRow => "softmax_row",
        }
    }
}

struct Node {
    value: Tensor,
    prim: Option<Primitive>,
    operands: Vec<Var>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients keyed by node, one entry per differentiable node reachable from
/// the loss. The loss maps to a tensor of ones.
#[derive(Debug, Clone, Default)]
pub struct GradientMap {
    grads: BTreeMap<Var, Tensor>,
}

impl GradientMap {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(&var)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.remove(&var)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Tensor)> {
        self.grads.iter()
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Broadcast {
    Same,
    Scalar,
    Row,
    Col,
}

fn broadcast_kind(op: &'static str, lhs: &Tensor, rhs: &Tensor) -> Result<Broadcast> {
    if lhs.shape() == rhs.shape() {
        return Ok(Broadcast::Same);
    }
    if rhs.len() == 1 {
        return Ok(Broadcast::Scalar);
    }
    if let Some((m, n)) = lhs.dims2() {
        match rhs.shape() {
            [1, c] | [c] if *c == n => return Ok(Broadcast::Row),
            [r, 1] if *r == m => return Ok(Broadcast::Col),
            _ => {}
        }
    }
    Err(Error::structural(
        op,
        format!("cannot combine {:?} with {:?}", lhs.shape(), rhs.shape()),
    ))
}

fn rhs_index(kind: Broadcast, n: usize, idx: usize) -> usize {
    match kind {
        Broadcast::Same => idx,
        Broadcast::Scalar => 0,
        Broadcast::Row => idx % n,
        Broadcast::Col => idx / n,
    }
}

/// Sum a gradient shaped like lhs down to the rhs shape.
fn reduce_to_rhs(kind: Broadcast, g: &[f64], n: usize, rhs: &Tensor) -> Tensor {
    let mut out = vec![0.0; rhs.len()];
    for (idx, &gi) in g.iter().enumerate() {
        out[rhs_index(kind, n, idx)] += gi;
    }
    Tensor::from_parts(rhs.shape().to_vec(), out)
}

fn last_dim(t: &Tensor) -> usize {
    *t.shape().last().unwrap_or(&1)
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, prim: Option<Primitive>, operands: Vec<Var>, rg: bool) -> Var {
        self.nodes.push(Node {
            value,
            prim,
            operands,
            requires_grad: rg,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, None, Vec::new(), requires_grad)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn check(&self, v: Var) -> Result<()> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::structural("graph", format!("unknown node {}", v.0)))
        }
    }

    /// Evaluate `prim` on `operands` and record it for differentiation.
    pub fn apply(&mut self, prim: Primitive, operands: &[Var]) -> Result<Var> {
        for &v in operands {
            self.check(v)?;
        }
        let arity_ok = match prim {
            Primitive::MatMul { .. } | Primitive::Add | Primitive::Sub | Primitive::Multiply => {
                operands.len() == 2
            }
            Primitive::Concat { .. } => !operands.is_empty(),
            _ => operands.len() == 1,
        };
        if !arity_ok {
            return Err(Error::structural(
                prim.name(),
                format!("wrong operand count {}", operands.len()),
            ));
        }
        let value = {
            let vals: Vec<&Tensor> = operands.iter().map(|v| &self.nodes[v.0].value).collect();
            forward(prim, &vals)?
        };
        let rg = operands.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(value, Some(prim), operands.to_vec(), rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::MatMul { rhs_transposed: false }, &[a, b])
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::MatMul { rhs_transposed: true }, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Multiply, &[a, b])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Relu, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sigmoid, &[a])
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Square, &[a])
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sqrt, &[a])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sum(Reduction::All), &[a])
    }

    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.apply(Primitive::Sum(Reduction::Axis(axis)), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Mean(Reduction::All), &[a])
    }

    pub fn mean_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.apply(Primitive::Mean(Reduction::Axis(axis)), &[a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        self.apply(Primitive::Concat { axis }, parts)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.apply(Primitive::Scale(c), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Exp, &[a])
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Log, &[a])
    }

    pub fn softmax_row(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::SoftmaxRow, &[a])
    }

    /// Reverse pass from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<GradientMap> {
        self.check(loss)?;
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(Error::structural(
                "backward",
                format!("loss must be scalar, got shape {:?}", lv.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape().to_vec(), 1.0));
        let mut out = BTreeMap::new();
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if let Some(prim) = node.prim {
                let needs: Vec<bool> = node
                    .operands
                    .iter()
                    .map(|v| self.nodes[v.0].requires_grad)
                    .collect();
                let vals: Vec<&Tensor> = node.operands.iter().map(|v| &self.nodes[v.0].value).collect();
                let operand_grads = vjp(prim, &vals, &node.value, &g, &needs)?;
                for (v, og) in node.operands.iter().zip(operand_grads) {
                    let Some(og) = og else { continue };
                    match &mut grads[v.0] {
                        Some(acc) => {
                            for (a, b) in acc.data_mut().iter_mut().zip(og.data()) {
                                *a += *b;
                            }
                        }
                        slot @ None => *slot = Some(og),
                    }
                }
            }
            if node.requires_grad || id == loss.0 {
                out.insert(Var(id), g);
            }
        }
        Ok(GradientMap { grads: out })
    }
}

fn forward(prim: Primitive, x: &[&Tensor]) -> Result<Tensor> {
    let op = prim.name();
    Ok(match prim {
        Primitive::MatMul { rhs_transposed } => {
            let (a, b) = (x[0], x[1]);
            let (m, k) = a
                .dims2()
                .ok_or_else(|| Error::structural(op, format!("lhs must be 2-D, got {:?}", a.shape())))?;
            match (b.shape(), rhs_transposed) {
                ([kb, n], false) if *kb == k => {
                    Tensor::from_parts(vec![m, *n], matmul_nn(a.data(), b.data(), m, k, *n))
                }
                ([n, kb], true) if *kb == k => {
                    Tensor::from_parts(vec![m, *n], matmul_nt(a.data(), b.data(), m, k, *n))
                }
                ([kb], false) if *kb == k => {
                    Tensor::from_parts(vec![m], matmul_nn(a.data(), b.data(), m, k, 1))
                }
                _ => {
                    return Err(Error::structural(
                        op,
                        format!(
                            "incompatible shapes {:?} and {:?}{}",
                            a.shape(),
                            b.shape(),
                            if rhs_transposed { " (rhs transposed)" } else { "" }
                        ),
                    ))
                }
            }
        }
        Primitive::Add | Primitive::Sub | Primitive::Multiply => {
            let (a, b) = (x[0], x[1]);
            let kind = broadcast_kind(op, a, b)?;
            let n = last_dim(a);
            let bd = b.data();
            let data = a
                .data()
                .iter()
                .enumerate()
                .map(|(i, &av)| {
                    let bv = bd[rhs_index(kind, n, i)];
                    match prim {
                        Primitive::Add => av + bv,
                        Primitive::Sub => av - bv,
                        _ => av * bv,
                    }
                })
                .collect();
            Tensor::from_parts(a.shape().to_vec(), data)
        }
        Primitive::Relu => map(x[0], |v| if v > 0.0 { v } else { 0.0 }),
        Primitive::Sigmoid => map(x[0], sigmoid),
        Primitive::Square => map(x[0], |v| v * v),
        Primitive::Sqrt => {
            if let Some(bad) = x[0].data().iter().find(|v| **v < 0.0) {
                return Err(Error::domain(op, format!("negative operand {bad}")));
            }
            map(x[0], f64::sqrt)
        }
        Primitive::Exp => map(x[0], f64::exp),
        Primitive::Log => {
            if let Some(bad) = x[0].data().iter().find(|v| !(**v > 0.0)) {
                return Err(Error::domain(op, format!("non-positive operand {bad}")));
            }
            map(x[0], f64::ln)
        }
        Primitive::Scale(c) => map(x[0], |v| c * v),
        Primitive::Sum(r) => reduce(op, x[0], r, false)?,
        Primitive::Mean(r) => reduce(op, x[0], r, true)?,
        Primitive::Concat { axis } => concat(op, x, axis)?,
        Primitive::SoftmaxRow => {
            let n = last_dim(x[0]);
            if x[0].shape().len() > 2 {
                return Err(Error::structural(op, format!("expects 1-D or 2-D, got {:?}", x[0].shape())));
            }
            let mut data = Vec::with_capacity(x[0].len());
            for row in x[0].data().chunks(n) {
                softmax_into(row, &mut data);
            }
            Tensor::from_parts(x[0].shape().to_vec(), data)
        }
    })
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softmax_into(row: &[f64], out: &mut Vec<f64>) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = out.len();
    let mut total = 0.0;
    for &v in row {
        let e = (v - max).exp();
        total += e;
        out.push(e);
    }
    for e in &mut out[start..] {
        *e /= total;
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect())
}

fn reduce(op: &'static str, t: &Tensor, r: Reduction, mean: bool) -> Result<Tensor> {
    match r {
        Reduction::All => {
            let mut s = 0.0;
            for &v in t.data() {
                s += v;
            }
            if mean {
                s /= t.len() as f64;
            }
            Ok(Tensor::scalar(s))
        }
        Reduction::Axis(axis) => {
            let (m, n) = t
                .dims2()
                .ok_or_else(|| Error::structural(op, format!("axis reduction needs 2-D, got {:?}", t.shape())))?;
            let d = t.data();
            match axis {
                0 => {
                    let mut s = vec![0.0; n];
                    for i in 0..m {
                        for (sj, &v) in s.iter_mut().zip(&d[i * n..(i + 1) * n]) {
                            *sj += v;
                        }
                    }
                    if mean {
                        s.iter_mut().for_each(|v| *v /= m as f64);
                    }
                    Ok(Tensor::from_parts(vec![1, n], s))
                }
                1 => {
                    let s = d
                        .chunks(n)
                        .map(|row| {
                            let mut acc = 0.0;
                            for &v in row {
                                acc += v;
                            }
                            if mean {
                                acc / n as f64
                            } else {
                                acc
                            }
                        })
                        .collect();
                    Ok(Tensor::from_parts(vec![m, 1], s))
                }
                _ => Err(Error::structural(op, format!("axis {axis} out of range for 2-D"))),
            }
        }
    }
}

fn concat(op: &'static str, parts: &[&Tensor], axis: usize) -> Result<Tensor> {
    let dims: Vec<(usize, usize)> = parts
        .iter()
        .map(|t| {
            t.dims2()
                .ok_or_else(|| Error::structural(op, format!("operands must be 2-D, got {:?}", t.shape())))
        })
        .collect::<Result<_>>()?;
    let shapes = || dims.iter().map(|d| format!("{d:?}")).collect::<Vec<_>>().join(", ");
    match axis {
        0 => {
            let n = dims[0].1;
            if dims.iter().any(|d| d.1 != n) {
                return Err(Error::structural(op, format!("column counts differ: {}", shapes())));
            }
            let m: usize = dims.iter().map(|d| d.0).sum();
            let mut data = Vec::with_capacity(m * n);
            for t in parts {
                data.extend_from_slice(t.data());
            }
            Ok(Tensor::from_parts(vec![m, n], data))
        }
        1 => {
            let m = dims[0].0;
            if dims.iter().any(|d| d.0 != m) {
                return Err(Error::structural(op, format!("row counts differ: {}", shapes())));
            }
            let n: usize = dims.iter().map(|d| d.1).sum();
            let mut data = Vec::with_capacity(m * n);
            for i in 0..m {
                for (t, d) in parts.iter().zip(&dims) {
                    data.extend_from_slice(&t.data()[i * d.1..(i + 1) * d.1]);
                }
            }
            Ok(Tensor::from_parts(vec![m, n], data))
        }
        _ => Err(Error::structural(op, format!("axis {axis} out of range for 2-D"))),
    }
}

/// Vector-Jacobian products for each operand flagged in `needs`.
fn vjp(prim: Primitive, x: &[&Tensor], y: &Tensor, g: &Tensor, needs: &[bool]) -> Result<Vec<Option<Tensor>>> {
    let gd = g.data();
    let like = |t: &Tensor, data: Vec<f64>| Tensor::from_parts(t.shape().to_vec(), data);
    let elementwise = |f: &dyn Fn(usize) -> f64| -> Vec<Option<Tensor>> {
        vec![needs[0].then(|| like(x[0], (0..gd.len()).map(f).collect()))]
    };
    Ok(match prim {
        Primitive::MatMul { rhs_transposed } => {
            let (a, b) = (x[0], x[1]);
            let (m, k) = a.dims2().expect("checked in forward");
            let n = if b.shape().len() == 1 {
                1
            } else if rhs_transposed {
                b.shape()[0]
            } else {
                b.shape()[1]
            };
            let ga = needs[0].then(|| {
                let d = if rhs_transposed {
                    matmul_nn(gd, b.data(), m, n, k)
                } else {
                    matmul_nt(gd, b.data(), m, n, k)
                };
                like(a, d)
            });
            let gb = needs[1].then(|| {
                let d = if rhs_transposed {
                    matmul_tn(gd, a.data(), m, n, k)
                } else {
                    matmul_tn(a.data(), gd, m, k, n)
                };
                like(b, d)
            });
            vec![ga, gb]
        }
        Primitive::Add | Primitive::Sub | Primitive::Multiply => {
            let (a, b) = (x[0], x[1]);
            let kind = broadcast_kind(prim.name(), a, b)?;
            let n = last_dim(a);
            let ga = needs[0].then(|| match prim {
                Primitive::Multiply => like(
                    a,
                    gd.iter()
                        .enumerate()
                        .map(|(i, &gi)| gi * b.data()[rhs_index(kind, n, i)])
                        .collect(),
                ),
                _ => g.clone(),
            });
            let gb = needs[1].then(|| {
                let full: Vec<f64> = match prim {
                    Primitive::Add => gd.to_vec(),
                    Primitive::Sub => gd.iter().map(|v| -v).collect(),
                    _ => gd.iter().zip(a.data()).map(|(gi, ai)| gi * ai).collect(),
                };
                reduce_to_rhs(kind, &full, n, b)
            });
            vec![ga, gb]
        }
        Primitive::Relu => {
            let xd = x[0].data();
            elementwise(&|i| if xd[i] > 0.0 { gd[i] } else { 0.0 })
        }
        Primitive::Sigmoid => {
            let yd = y.data();
            elementwise(&|i| gd[i] * yd[i] * (1.0 - yd[i]))
        }
        Primitive::Square => {
            let xd = x[0].data();
            elementwise(&|i| gd[i] * 2.0 * xd[i])
        }
        Primitive::Sqrt => {
            let yd = y.data();
            elementwise(&|i| if yd[i] > 0.0 { gd[i] / (2.0 * yd[i]) } else { 0.0 })
        }
        Primitive::Exp => {
            let yd = y.data();
            elementwise(&|i| gd[i] * yd[i])
        }
        Primitive::Log => {
            let xd = x[0].data();
            elementwise(&|i| gd[i] / xd[i])
        }
        Primitive::Scale(c) => elementwise(&|i| c * gd[i]),
        Primitive::Sum(r) | Primitive::Mean(r) => {
            let t = x[0];
            let is_mean = matches!(prim, Primitive::Mean(_));
            let data = match r {
                Reduction::All => {
                    let s = if is_mean { gd[0] / t.len() as f64 } else { gd[0] };
                    vec![s; t.len()]
                }
                Reduction::Axis(axis) => {
                    let (m, n) = t.dims2().expect("checked in forward");
                    let mut d = Vec::with_capacity(m * n);
                    for i in 0..m {
                        for j in 0..n {
                            let v = if axis == 0 { gd[j] } else { gd[i] };
                            d.push(if is_mean {
                                v / if axis == 0 { m as f64 } else { n as f64 }
                            } else {
                                v
                            });
                        }
                    }
                    d
                }
            };
            vec![needs[0].then(|| like(t, data))]
        }
        Primitive::Concat { axis } => {
            let total_n = last_dim(y);
            let mut out = Vec::with_capacity(x.len());
            let mut offset = 0;
            for (t, &need) in x.iter().zip(needs) {
                let (m, n) = t.dims2().expect("checked in forward");
                let part = need.then(|| {
                    let d = if axis == 0 {
                        gd[offset * total_n..(offset + m) * total_n].to_vec()
                    } else {
                        let mut d = Vec::with_capacity(m * n);
                        for i in 0..m {
                            d.extend_from_slice(&gd[i * total_n + offset..i * total_n + offset + n]);
                        }
                        d
                    };
                    like(t, d)
                });
                offset += if axis == 0 { m } else { n };
                out.push(part);
            }
            out
        }
        Primitive::SoftmaxRow => {
            let n = last_dim(y);
            let yd = y.data();
            let mut d = Vec::with_capacity(yd.len());
            for (yr, gr) in yd.chunks(n).zip(gd.chunks(n)) {
                let mut dot = 0.0;
                for (a, b) in yr.iter().zip(gr) {
                    dot += a * b;
                }
                d.extend(yr.iter().zip(gr).map(|(yi, gi)| yi * (gi - dot)));
            }
            vec![needs[0].then(|| like(x[0], d))]
        }
    })
}
