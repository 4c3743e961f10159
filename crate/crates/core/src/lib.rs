//! Symbolic qudit gates, circuit IR, and a bytecode virtual machine for
//! repeated unitary and gradient evaluation.

pub mod matrix;
pub mod scalar;
pub mod symexpr;

pub mod congruence;
pub mod esat;
pub mod frontend;
pub mod gates;
pub mod kernels;
pub mod qcir;
pub mod qvm;
pub mod qvmc;

pub use matrix::Matrix;
pub use scalar::{Precision, RealScalar, C32, C64};
pub use symexpr::{ComplexExpr, ScalarExpr, UnitaryExprMatrix};

pub type ExpressionModule32 = kernels::ExpressionModule<f32>;
pub type ExpressionModule64 = kernels::ExpressionModule<f64>;
pub type Qvm32 = qvm::Qvm<f32>;
pub type Qvm64 = qvm::Qvm<f64>;
