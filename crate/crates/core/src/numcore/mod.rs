//! Dense rank-2 tensors with a reverse-mode gradient tape.
//!
//! Only what the model needs: matrix products, bias rows, elementwise
//! arithmetic, the activations, column concatenation and the binary
//! cross-entropy loss. Sequences and batches are lists of rank-2 tensors.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_many, DEFAULT_EPS};
pub use tape::{bce_term, sigmoid, Activation, Tape, Var, PROB_CLIP};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("{op}: incompatible shapes {}x{} and {}x{}", left.0, left.1, right.0, right.1)]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{len} values cannot fill a {rows}x{cols} tensor")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("ragged rows: expected {expected} columns, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("{0}")]
    Contract(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
