//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every scalar operation as a node whose parents were
//! created before it. [`Tape::backward`] walks the nodes once in reverse,
//! accumulating adjoints. Tapes are cheap and meant to be rebuilt for every
//! forward pass.
//!
//! ```
//! use kinform::autodiff::Tape;
//!
//! let tape = Tape::new();
//! let x = tape.lift(3.0).unwrap();
//! let y = x.square() + x.sin();
//! let grads = tape.backward(y).unwrap();
//! assert!((grads.wrt(x) - (6.0 + 3f64.cos())).abs() < 1e-12);
//! ```

mod gradcheck;
mod real;
mod tape;

pub use gradcheck::{finite_differences, grad_check, gradient, relative_error, Objective};
pub use real::{smooth_norm, sum, Real};
pub use tape::{Gradients, PrimitiveOp, Tape, Var};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("cannot lift non-finite value {value}")]
    NonFiniteInput { value: f64 },
    #[error("{op} outside its domain at node {node} (args {args:?})")]
    Domain { op: PrimitiveOp, node: usize, args: Vec<f64> },
    #[error("node {node} evaluated to a non-finite value")]
    NonFinite { node: usize },
    #[error("{op} expects {expected} argument(s), got {got}")]
    Arity { op: PrimitiveOp, expected: usize, got: usize },
    #[error("{op} applied to a variable from another tape")]
    ForeignVar { op: PrimitiveOp },
    #[error("backward output belongs to another tape")]
    ForeignOutput,
    #[error("finite-difference probe of coordinate {coordinate} is not finite")]
    NonFiniteProbe { coordinate: usize },
}
