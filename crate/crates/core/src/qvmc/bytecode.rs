use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::perm::PermSpec;
use super::tree::{binding_str, ExprTree, NodeKind};
use crate::kernels::ExprId;
use crate::qcir::ParamBinding;

pub type BufferId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    /// Evaluate a kernel into an identity-initialized buffer.
    Write { kernel: ExprId, bindings: Vec<ParamBinding>, dst: BufferId },
    Frpr { src: BufferId, spec: PermSpec, dst: BufferId },
    /// `dst = a · b` with `a` of shape `m×k` and `b` of shape `k×n`.
    Matmul { a: BufferId, b: BufferId, dst: BufferId, m: usize, k: usize, n: usize },
    Kron { a: BufferId, b: BufferId, dst: BufferId, a_shape: (usize, usize), b_shape: (usize, usize) },
}

impl Instruction {
    pub fn dst(&self) -> BufferId {
        match self {
            Instruction::Write { dst, .. }
            | Instruction::Frpr { dst, .. }
            | Instruction::Matmul { dst, .. }
            | Instruction::Kron { dst, .. } => *dst,
        }
    }

    pub fn sources(&self) -> Vec<BufferId> {
        match self {
            Instruction::Write { .. } => vec![],
            Instruction::Frpr { src, .. } => vec![*src],
            Instruction::Matmul { a, b, .. } | Instruction::Kron { a, b, .. } => vec![*a, *b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferInfo {
    pub rows: usize,
    pub cols: usize,
    /// Written by the static section only.
    pub constant: bool,
    /// Target of a WRITE; holds nothing else.
    pub kernel_output: bool,
}

/// QVM program: a static section run once at warm-up and a dynamic section
/// run per evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bytecode {
    pub static_code: Vec<Instruction>,
    pub dynamic_code: Vec<Instruction>,
    pub buffers: Vec<BufferInfo>,
    pub output: BufferId,
    pub num_params: usize,
    pub dim: usize,
}

impl Bytecode {
    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.static_code.iter().chain(&self.dynamic_code)
    }

    pub fn count(&self, pred: impl Fn(&Instruction) -> bool) -> usize {
        self.instructions().filter(|i| pred(i)).count()
    }

    pub fn num_frpr(&self) -> usize {
        self.count(|i| matches!(i, Instruction::Frpr { .. }))
    }

    /// Check that buffers are written before they are read, that static
    /// code reads only static buffers, and that the last instruction writes
    /// the output.
    pub fn validate(&self) -> Result<(), String> {
        let mut written = vec![false; self.buffers.len()];
        for (section, code) in [("static", &self.static_code), ("dynamic", &self.dynamic_code)] {
            for (k, instr) in code.iter().enumerate() {
                for s in instr.sources() {
                    if !written[s] {
                        return Err(format!("{section} {k}: b{s} read before written"));
                    }
                    if section == "static" && !self.buffers[s].constant {
                        return Err(format!("static {k}: reads dynamic b{s}"));
                    }
                }
                let d = instr.dst();
                if d >= self.buffers.len() {
                    return Err(format!("{section} {k}: no buffer b{d}"));
                }
                if (section == "static") != self.buffers[d].constant {
                    return Err(format!("{section} {k}: b{d} in the wrong section"));
                }
                if instr.sources().contains(&d) {
                    return Err(format!("{section} {k}: b{d} is read and written"));
                }
                written[d] = true;
            }
        }
        let last = self.dynamic_code.last().or(self.static_code.last()).ok_or("empty program")?;
        if last.dst() != self.output {
            return Err("last instruction does not write the output".into());
        }
        Ok(())
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Write { kernel, bindings, dst } => {
                write!(f, "WRITE k{kernel} -> b{dst}")?;
                if !bindings.is_empty() {
                    let bs: Vec<String> = bindings.iter().map(binding_str).collect();
                    write!(f, " ({})", bs.join(", "))?;
                }
                Ok(())
            }
            Instruction::Frpr { src, spec, dst } => {
                write!(f, "FRPR b{src} -> b{dst} perm={:?} dims={:?}", spec.perm, spec.dims)
            }
            Instruction::Matmul { a, b, dst, .. } => write!(f, "MATMUL b{a} b{b} -> b{dst}"),
            Instruction::Kron { a, b, dst, .. } => write!(f, "KRON b{a} b{b} -> b{dst}"),
        }
    }
}

impl fmt::Display for Bytecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "STATIC:")?;
        for i in &self.static_code {
            writeln!(f, "  {i}")?;
        }
        writeln!(f, "DYNAMIC:")?;
        for i in &self.dynamic_code {
            writeln!(f, "  {i}")?;
        }
        write!(f, "OUTPUT: b{}", self.output)
    }
}

struct Section {
    code: Vec<Instruction>,
    // Free buffers by element count.
    free: HashMap<usize, Vec<BufferId>>,
    constant: bool,
}

struct Gen {
    buffers: Vec<BufferInfo>,
    sections: [Section; 2],
}

impl Gen {
    fn alloc(&mut self, s: usize, shape: (usize, usize), kernel_output: bool) -> BufferId {
        if !kernel_output {
            if let Some(b) = self.sections[s].free.get_mut(&(shape.0 * shape.1)).and_then(Vec::pop) {
                self.buffers[b].rows = shape.0;
                self.buffers[b].cols = shape.1;
                return b;
            }
        }
        let constant = self.sections[s].constant;
        self.buffers.push(BufferInfo { rows: shape.0, cols: shape.1, constant, kernel_output });
        self.buffers.len() - 1
    }

    /// Return `b` to section `s`'s pool if it belongs there.
    fn release(&mut self, s: usize, b: BufferId) {
        let info = &self.buffers[b];
        if info.kernel_output || info.constant != self.sections[s].constant {
            return;
        }
        self.sections[s].free.entry(info.rows * info.cols).or_default().push(b);
    }
}

/// Lower a tree to bytecode. Constant subtrees go to the static section
/// when `sectioning` is on.
pub fn codegen(t: &ExprTree, sectioning: bool) -> Bytecode {
    let mut g = Gen {
        buffers: Vec::new(),
        sections: [
            Section { code: vec![], free: HashMap::new(), constant: true },
            Section { code: vec![], free: HashMap::new(), constant: false },
        ],
    };
    let mut value: HashMap<usize, BufferId> = HashMap::new();
    for i in t.post_order() {
        let node = &t.nodes[i];
        let s = if sectioning && node.constant { 0 } else { 1 };
        let shape = node.layout.shape();
        let b = match &node.kind {
            NodeKind::Leaf { expr, bindings } => {
                let dst = g.alloc(s, shape, true);
                g.sections[s].code.push(Instruction::Write { kernel: *expr, bindings: bindings.clone(), dst });
                dst
            }
            NodeKind::MatMul(l, r) => {
                let (a, b) = (value[l], value[r]);
                let (m, k) = t.nodes[*l].layout.shape();
                let n = t.nodes[*r].layout.shape().1;
                let dst = g.alloc(s, (m, n), false);
                g.sections[s].code.push(Instruction::Matmul { a, b, dst, m, k, n });
                g.release(s, a);
                g.release(s, b);
                dst
            }
            NodeKind::Kron(l, r) => {
                let (a, b) = (value[l], value[r]);
                let a_shape = t.nodes[*l].layout.shape();
                let b_shape = t.nodes[*r].layout.shape();
                let dst = g.alloc(s, shape, false);
                g.sections[s].code.push(Instruction::Kron { a, b, dst, a_shape, b_shape });
                g.release(s, a);
                g.release(s, b);
                dst
            }
            NodeKind::Contract { l, r, left, right, out, left_target, right_target, product, .. } => {
                let frpr = |g: &mut Gen, src: BufferId, spec: &Option<PermSpec>| match spec {
                    Some(spec) => {
                        let dst = g.alloc(s, spec.out_shape, false);
                        g.sections[s].code.push(Instruction::Frpr { src, spec: spec.clone(), dst });
                        g.release(s, src);
                        dst
                    }
                    None => src,
                };
                let a = frpr(&mut g, value[l], left);
                let b = frpr(&mut g, value[r], right);
                let (m, k) = left_target.shape();
                let n = right_target.shape().1;
                debug_assert_eq!(product.shape(), (m, n));
                // Without an output permutation the product is already in
                // the node's memory order; only the matrix shape may differ.
                let dst = g.alloc(s, if out.is_some() { (m, n) } else { shape }, false);
                g.sections[s].code.push(Instruction::Matmul { a, b, dst, m, k, n });
                g.release(s, a);
                g.release(s, b);
                frpr(&mut g, dst, out)
            }
            NodeKind::Perm { child, spec } => {
                let src = value[child];
                let dst = g.alloc(s, spec.out_shape, false);
                g.sections[s].code.push(Instruction::Frpr { src, spec: spec.clone(), dst });
                g.release(s, src);
                dst
            }
        };
        value.insert(i, b);
    }
    let [st, dy] = g.sections;
    Bytecode {
        static_code: st.code,
        dynamic_code: dy.code,
        buffers: g.buffers,
        output: value[&t.root],
        num_params: t.num_params,
        dim: t.radices.iter().product(),
    }
}
