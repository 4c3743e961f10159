//! Register programs for unitary expressions and their gradients, and the
//! expression module that holds them.

mod module;
mod program;

pub use module::{
    build_module, exec_kernel, simplify_with_gradients, ExprId, ExpressionModule, MatrixBuffer, ModuleBuilder,
    ModuleEntry, SimplifiedExpr,
};
pub use program::{
    compile_gradient_kernels, compile_kernel, compile_with, compile_without_cse, BinaryOp, BufferInit, Instr,
    KernelProgram, UnaryOp,
};
