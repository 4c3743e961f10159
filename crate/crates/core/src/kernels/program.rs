use std::collections::HashMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::RealScalar;
use crate::symexpr::{rational_to_f64, ExprKind, ScalarExpr, UnitaryExprMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
        }
    }

    #[inline]
    fn apply<R: RealScalar>(self, a: R) -> R {
        match self {
            UnaryOp::Neg => -a,
            UnaryOp::Sqrt => a.sqrt(),
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Exp => a.exp(),
            UnaryOp::Ln => a.ln(),
        }
    }
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }

    #[inline]
    fn apply<R: RealScalar>(self, a: R, b: R) -> R {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Pow => a.powf(b),
        }
    }
}

/// One register-machine instruction. Registers are assigned once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instr {
    LoadParam { dst: u32, param: u32 },
    LoadConst { dst: u32, value: f64 },
    Unary { dst: u32, op: UnaryOp, a: u32 },
    Binary { dst: u32, op: BinaryOp, a: u32, b: u32 },
    StoreRe { row: u32, col: u32, src: u32 },
    StoreIm { row: u32, col: u32, src: u32 },
}

/// What a buffer holds before a kernel runs; stores of that value are
/// skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BufferInit {
    Identity,
    Zero,
}

/// A straight-line program filling a `dim × dim` complex buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProgram {
    pub instrs: Vec<Instr>,
    pub num_regs: usize,
    pub num_params: usize,
    pub dim: usize,
}

/// Compile the unitary kernel of `u`, for an identity-initialized buffer.
pub fn compile_kernel(u: &UnitaryExprMatrix) -> KernelProgram {
    compile_with(u, BufferInit::Identity)
}

/// One kernel per parameter, each filling a zero-initialized buffer with
/// the partial derivative.
pub fn compile_gradient_kernels(u: &UnitaryExprMatrix) -> Vec<KernelProgram> {
    u.differentiate().iter().map(|g| compile_with(g, BufferInit::Zero)).collect()
}

/// Compile with structural common-subexpression elimination.
pub fn compile_with(u: &UnitaryExprMatrix, init: BufferInit) -> KernelProgram {
    compile_impl(u, init, true)
}

/// Compile without sharing registers between equal subexpressions.
pub fn compile_without_cse(u: &UnitaryExprMatrix, init: BufferInit) -> KernelProgram {
    compile_impl(u, init, false)
}

fn compile_impl(u: &UnitaryExprMatrix, init: BufferInit, cse: bool) -> KernelProgram {
    let params: HashMap<&str, u32> = u.params().iter().enumerate().map(|(i, p)| (p.as_str(), i as u32)).collect();
    let mut b = Builder { instrs: Vec::new(), next: 0, regs: HashMap::new(), consts: HashMap::new(), params, cse };
    let dim = u.dim();
    for (k, el) in u.elements().iter().enumerate() {
        let (row, col) = (k / dim, k % dim);
        let diag = row == col;
        let default_re = |e: &ScalarExpr| match init {
            BufferInit::Identity if diag => e.is_one(),
            _ => e.is_zero(),
        };
        if !default_re(&el.re) {
            let src = b.emit(&el.re);
            b.instrs.push(Instr::StoreRe { row: row as u32, col: col as u32, src });
        }
        if !el.im.is_zero() {
            let src = b.emit(&el.im);
            b.instrs.push(Instr::StoreIm { row: row as u32, col: col as u32, src });
        }
    }
    KernelProgram { instrs: b.instrs, num_regs: b.next as usize, num_params: u.num_params(), dim }
}

struct Builder<'a> {
    instrs: Vec<Instr>,
    next: u32,
    regs: HashMap<ScalarExpr, u32>,
    consts: HashMap<u64, u32>,
    params: HashMap<&'a str, u32>,
    cse: bool,
}

impl Builder<'_> {
    fn fresh(&mut self) -> u32 {
        self.next += 1;
        self.next - 1
    }

    fn constant(&mut self, value: f64) -> u32 {
        if self.cse {
            if let Some(&r) = self.consts.get(&value.to_bits()) {
                return r;
            }
        }
        let dst = self.fresh();
        self.instrs.push(Instr::LoadConst { dst, value });
        self.consts.insert(value.to_bits(), dst);
        dst
    }

    fn emit(&mut self, e: &ScalarExpr) -> u32 {
        if self.cse {
            if let Some(&r) = self.regs.get(e) {
                return r;
            }
        }
        let reg = match e.kind() {
            ExprKind::Var(name) => {
                let param = *self.params.get(&**name).expect("free variables are parameters");
                let dst = self.fresh();
                self.instrs.push(Instr::LoadParam { dst, param });
                dst
            }
            ExprKind::Pi => self.constant(std::f64::consts::PI),
            ExprKind::Const(c) => self.constant(rational_to_f64(c)),
            ExprKind::Float(bits) => self.constant(f64::from_bits(*bits)),
            ExprKind::Neg(a) => self.unary(UnaryOp::Neg, a),
            ExprKind::Sqrt(a) => self.unary(UnaryOp::Sqrt, a),
            ExprKind::Sin(a) => self.unary(UnaryOp::Sin, a),
            ExprKind::Cos(a) => self.unary(UnaryOp::Cos, a),
            ExprKind::Exp(a) => self.unary(UnaryOp::Exp, a),
            ExprKind::Ln(a) => self.unary(UnaryOp::Ln, a),
            ExprKind::Add(a, b) => self.binary(BinaryOp::Add, a, b),
            ExprKind::Sub(a, b) => self.binary(BinaryOp::Sub, a, b),
            ExprKind::Mul(a, b) => self.binary(BinaryOp::Mul, a, b),
            ExprKind::Div(a, b) => self.binary(BinaryOp::Div, a, b),
            ExprKind::Pow(a, b) => self.binary(BinaryOp::Pow, a, b),
        };
        if self.cse {
            self.regs.insert(e.clone(), reg);
        }
        reg
    }

    fn unary(&mut self, op: UnaryOp, a: &ScalarExpr) -> u32 {
        let a = self.emit(a);
        let dst = self.fresh();
        self.instrs.push(Instr::Unary { dst, op, a });
        dst
    }

    fn binary(&mut self, op: BinaryOp, a: &ScalarExpr, b: &ScalarExpr) -> u32 {
        let a = self.emit(a);
        let b = self.emit(b);
        let dst = self.fresh();
        self.instrs.push(Instr::Binary { dst, op, a, b });
        dst
    }
}

impl KernelProgram {
    /// Run into `out`, a row-major `dim × dim` buffer that already holds
    /// the initial value. `regs` is scratch space reused across calls.
    /// Returns false if any stored value is not finite.
    #[inline]
    pub fn exec_into<R: RealScalar>(&self, params: &[R], out: &mut [Complex<R>], regs: &mut Vec<R>) -> bool {
        debug_assert_eq!(params.len(), self.num_params);
        debug_assert_eq!(out.len(), self.dim * self.dim);
        regs.clear();
        regs.resize(self.num_regs, R::zero());
        let mut finite = true;
        for ins in &self.instrs {
            match *ins {
                Instr::LoadParam { dst, param } => regs[dst as usize] = params[param as usize],
                Instr::LoadConst { dst, value } => regs[dst as usize] = R::from_f64_lossy(value),
                Instr::Unary { dst, op, a } => regs[dst as usize] = op.apply(regs[a as usize]),
                Instr::Binary { dst, op, a, b } => regs[dst as usize] = op.apply(regs[a as usize], regs[b as usize]),
                Instr::StoreRe { row, col, src } => {
                    let v = regs[src as usize];
                    finite &= v.is_finite();
                    out[row as usize * self.dim + col as usize].re = v;
                }
                Instr::StoreIm { row, col, src } => {
                    let v = regs[src as usize];
                    finite &= v.is_finite();
                    out[row as usize * self.dim + col as usize].im = v;
                }
            }
        }
        finite
    }

    /// Number of instructions applying `op`.
    pub fn count_unary(&self, op: UnaryOp) -> usize {
        self.instrs.iter().filter(|i| matches!(i, Instr::Unary { op: o, .. } if *o == op)).count()
    }

    pub fn num_stores(&self) -> usize {
        self.instrs.iter().filter(|i| matches!(i, Instr::StoreRe { .. } | Instr::StoreIm { .. })).count()
    }
}

impl fmt::Display for KernelProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "; dim={} params={} regs={}", self.dim, self.num_params, self.num_regs)?;
        for ins in &self.instrs {
            match ins {
                Instr::LoadParam { dst, param } => writeln!(f, "r{dst} = param {param}")?,
                Instr::LoadConst { dst, value } => writeln!(f, "r{dst} = const {value:?}")?,
                Instr::Unary { dst, op, a } => writeln!(f, "r{dst} = {} r{a}", op.name())?,
                Instr::Binary { dst, op, a, b } => writeln!(f, "r{dst} = {} r{a} r{b}", op.name())?,
                Instr::StoreRe { row, col, src } => writeln!(f, "store.re ({row}, {col}) r{src}")?,
                Instr::StoreIm { row, col, src } => writeln!(f, "store.im ({row}, {col}) r{src}")?,
            }
        }
        Ok(())
    }
}
