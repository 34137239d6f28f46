//! Math core for rank-supervised semantic relational reasoning.
//!
//! Everything here is generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the rest of the workspace uses the `f64` aliases
//! exported at the crate root. Three layers build on each other:
//!
//! * [`tape`] — reverse-mode autodiff over a recorded operation tape,
//!   with [`ops`] providing the composite building blocks (affine maps,
//!   softmax, pooling, cosine, MSE, cross-entropy) in both plain-value
//!   and differentiable form.
//! * [`ndcg`] — a differentiable ranking loss: temperature-controlled
//!   soft permutations, Sinkhorn balancing, and the normalized
//!   gain/discount objective.
//! * [`srr`] — the relational reasoning head that scores importance,
//!   complementarity, and inconsistency over a text feature and a set
//!   of fine-grained semantic features, plus the classic fusion
//!   baselines.

pub mod error;
pub mod ndcg;
pub mod ops;
pub mod scalar;
pub mod srr;
pub mod tape;
pub mod vector;

pub use error::CoreError;
pub use scalar::Scalar;
pub use tape::{GradCheck, Tape, Var};
pub use vector::{Matrix, Vector};

/// `f64` instantiations used throughout the workspace.
pub type Vector64 = Vector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Tape64 = Tape<f64>;
