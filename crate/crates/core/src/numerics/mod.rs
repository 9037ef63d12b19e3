//! Minimal dense linear algebra and a multilayer-perceptron engine with
//! exact reverse-mode gradients. 64-bit floats throughout.

mod linalg;
mod matrix;
mod mlp;

pub use linalg::{cholesky, condition_number, invert, rank, solve};
pub use matrix::Matrix;
pub use mlp::{
    init_params, weighted_mse, Activation, ForwardTrace, MlpGradients, MlpParams,
};
