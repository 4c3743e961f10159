//! Compile circuits to QVM bytecode: a greedy contraction tree over the
//! gates, tree rewrites, and lowering to buffer instructions.

mod bytecode;
mod greedy;
mod optimize;
mod perm;
mod tree;

use serde::{Deserialize, Serialize};

pub use bytecode::{codegen, BufferId, BufferInfo, Bytecode, Instruction};
pub use greedy::{build_tree, circuit_expression};
pub use optimize::{const_prop, fuse_frpr, fuse_subtrees};
pub use perm::{PermError, PermSpec};
pub use tree::{ExprTree, Layout, Leg, Node, NodeKind};

use crate::kernels::{ExpressionModule, ModuleBuilder, ModuleEntry};
use crate::qcir::Circuit;
use crate::scalar::RealScalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("circuit has non-unitary instructions")]
    NonUnitary,
    #[error("symbolic: {0}")]
    Symbolic(String),
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    /// Fuse product-only subtrees into single kernels.
    pub fuse: bool,
    /// Largest subtree, in qudits, that fusion may replace.
    pub fuse_qudits: usize,
    /// Tensors spanning fewer qudits than this may pair up as a Kronecker
    /// product feeding a multiplication instead of being contracted.
    pub kron_threshold: usize,
    /// Merge chained permutations and drop those that move nothing.
    pub fuse_frpr: bool,
    /// Put constant subtrees in the static section.
    pub sectioning: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { fuse: true, fuse_qudits: 2, kron_threshold: 2, fuse_frpr: true, sectioning: true }
    }
}

impl CompileOptions {
    /// No rewrites at all: the tree as built, every permutation lowered.
    pub fn unoptimized() -> Self {
        CompileOptions { fuse: false, fuse_frpr: false, sectioning: false, ..Default::default() }
    }
}

/// A compiled circuit: bytecode plus the expressions its WRITEs reference.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub tree: ExprTree,
    pub exprs: ModuleBuilder,
    pub bytecode: Bytecode,
}

impl Compiled {
    pub fn module<R: RealScalar>(&self) -> ExpressionModule<R> {
        self.exprs.build()
    }

    /// Bytecode and kernel programs in one serializable value.
    pub fn artifact(&self) -> Artifact {
        let m: ExpressionModule<f64> = self.module();
        Artifact { bytecode: self.bytecode.clone(), kernels: m.entries().to_vec() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub bytecode: Bytecode,
    pub kernels: Vec<ModuleEntry>,
}

/// Compile with the default simplifier. Subcircuits are inlined first.
pub fn compile(c: &Circuit, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    compile_with(c, opts, ModuleBuilder::new())
}

pub fn compile_with(c: &Circuit, opts: &CompileOptions, mut exprs: ModuleBuilder) -> Result<Compiled, CompileError> {
    let flat = c.flatten();
    let mut tree = build_tree(&flat, &mut exprs, opts)?;
    if opts.fuse {
        fuse_subtrees(&mut tree, &mut exprs, opts.fuse_qudits);
    }
    if opts.fuse_frpr {
        fuse_frpr(&mut tree);
    }
    const_prop(&mut tree);
    let bytecode = codegen(&tree, opts.sectioning);
    Ok(Compiled { tree, exprs, bytecode })
}
