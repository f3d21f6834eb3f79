//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod gradcheck;
mod graph;
pub mod kernels;
mod tensor;

pub use gradcheck::{finite_difference_check, value_and_grad, ScalarFn};
pub use graph::{GradientMap, Graph, Primitive, Reduction, Var};
pub use tensor::Tensor;
