//! Deterministic double-precision learning kernel: tensors, layers with
//! hand-written gradients, Adam, PCA and a finite-difference checker.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod pca;
pub mod tensor;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{check_layer, check_model, GradCheckReport, Objective};
pub use layers::{softmax, Activation, Cache, Conv3d, Dense, Layer, Lstm, SeqOutput, Sequential};
pub use loss::softmax_cross_entropy;
pub use pca::{pca_fit, PcaModel};
pub use tensor::{argmax, Tensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    Shape { op: &'static str, expected: Vec<usize>, got: Vec<usize> },
    #[error("{0}")]
    Param(String),
}

impl LearnError {
    pub fn shape(op: &'static str, expected: &[usize], got: &[usize]) -> Self {
        LearnError::Shape { op, expected: expected.to_vec(), got: got.to_vec() }
    }
}
