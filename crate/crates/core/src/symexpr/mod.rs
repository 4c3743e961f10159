//! Symbolic real and complex expressions and unitary-expression algebra.

mod complex;
mod diff;
mod eval;
mod scalar;
mod unitary;

pub use complex::ComplexExpr;
pub use diff::differentiate;
pub use eval::{eval_scalar, eval_with, DomainError, Evaluator};
pub use scalar::{ExprKind, Rational, ScalarExpr};
pub use unitary::{kron_elements, matmul_elements, UnitaryExprMatrix};

#[allow(unused_imports)]
pub(crate) use scalar::{rational_powi, rational_sqrt, rational_to_f64};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SymError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid radices {0:?}")]
    InvalidRadices(Vec<usize>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("expected {expected} parameters, found {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("domain error at element ({row}, {col}): {reason}")]
    Domain { row: usize, col: usize, reason: DomainError },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
