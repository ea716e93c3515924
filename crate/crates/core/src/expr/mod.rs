//! Scalar and matrix-valued fields over a single chart of `R^{2n}`.

mod ast;
pub mod fd;
mod jet;
mod matrix;
mod parser;

pub use ast::{Expression, Func, Node};
pub use fd::{fd_gradient, fd_gradient_auto, fd_hessian};
pub use jet::Jet2;
pub use matrix::{MatrixField, MatrixJet};
pub use parser::parse;
