//! Minimal reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Tape`] records every operation as one node. [`Var`] is a cheap handle
//! into the tape; [`Tensor`] is a plain value detached from any tape.
//! Broadcasting is limited to scalar-with-tensor; everything else needs an
//! explicit reshape, narrow or bias op.

mod check;
mod optim;
mod tape;
mod tensor;

use thiserror::Error;

pub use check::{grad_check, grad_check_many};
pub use optim::{rmsprop_step, RmsProp};
pub use tape::{concat, Gradients, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdError {
    #[error("ShapeError in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("ShapeError: backward needs a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("NonFinite: {op} produced a non-finite value")]
    NonFinite { op: &'static str },
}
