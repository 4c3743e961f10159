use std::fmt;
use std::sync::Arc;

use crate::symexpr::{ExprKind, Rational, ScalarExpr};

/// E-class identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Id(pub(crate) u32);

impl Id {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Operator of an e-node. Declaration order is the tie-breaking ordinal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Op {
    Pi,
    Var(Arc<str>),
    Const(Rational),
    Float(u64),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Pi | Op::Var(_) | Op::Const(_) | Op::Float(_) => 0,
            Op::Neg | Op::Sqrt | Op::Sin | Op::Cos | Op::Exp | Op::Ln => 1,
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => 2,
        }
    }

    /// Operator kind with any payload erased; used to index nodes.
    pub fn kind_index(&self) -> usize {
        match self {
            Op::Pi => 0,
            Op::Var(_) => 1,
            Op::Const(_) => 2,
            Op::Float(_) => 3,
            Op::Neg => 4,
            Op::Add => 5,
            Op::Sub => 6,
            Op::Mul => 7,
            Op::Div => 8,
            Op::Pow => 9,
            Op::Sqrt => 10,
            Op::Sin => 11,
            Op::Cos => 12,
            Op::Exp => 13,
            Op::Ln => 14,
        }
    }

    pub const KINDS: usize = 15;

    /// Operator for a function name or symbol, as written in rule files.
    pub fn from_name(name: &str) -> Option<Op> {
        Some(match name {
            "~" => Op::Neg,
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "^" | "pow" => Op::Pow,
            "sqrt" => Op::Sqrt,
            "sin" => Op::Sin,
            "cos" => Op::Cos,
            "exp" => Op::Exp,
            "ln" => Op::Ln,
            _ => return None,
        })
    }
}

/// An operator applied to e-classes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ENode {
    pub op: Op,
    args: [Id; 2],
}

impl ENode {
    pub fn leaf(op: Op) -> Self {
        debug_assert_eq!(op.arity(), 0);
        ENode { op, args: [Id(0); 2] }
    }

    pub fn unary(op: Op, a: Id) -> Self {
        debug_assert_eq!(op.arity(), 1);
        ENode { op, args: [a, Id(0)] }
    }

    pub fn binary(op: Op, a: Id, b: Id) -> Self {
        debug_assert_eq!(op.arity(), 2);
        ENode { op, args: [a, b] }
    }

    pub fn new(op: Op, children: &[Id]) -> Self {
        debug_assert_eq!(op.arity(), children.len());
        let mut args = [Id(0); 2];
        args[..children.len()].copy_from_slice(children);
        ENode { op, args }
    }

    #[inline]
    pub fn children(&self) -> &[Id] {
        &self.args[..self.op.arity()]
    }

    #[inline]
    pub fn children_mut(&mut self) -> &mut [Id] {
        let n = self.op.arity();
        &mut self.args[..n]
    }

    /// Same operator over new children.
    pub fn map_children(&self, mut f: impl FnMut(Id) -> Id) -> Self {
        let mut out = self.clone();
        for c in out.children_mut() {
            *c = f(*c);
        }
        out
    }

    /// Build the expression for this node given expressions for its children.
    pub fn to_expr(&self, kids: &[ScalarExpr]) -> ScalarExpr {
        let k = |i: usize| kids[i].clone();
        ScalarExpr::from_kind(match &self.op {
            Op::Pi => ExprKind::Pi,
            Op::Var(v) => ExprKind::Var(v.clone()),
            Op::Const(c) => ExprKind::Const(*c),
            Op::Float(bits) => ExprKind::Float(*bits),
            Op::Neg => ExprKind::Neg(k(0)),
            Op::Add => ExprKind::Add(k(0), k(1)),
            Op::Sub => ExprKind::Sub(k(0), k(1)),
            Op::Mul => ExprKind::Mul(k(0), k(1)),
            Op::Div => ExprKind::Div(k(0), k(1)),
            Op::Pow => ExprKind::Pow(k(0), k(1)),
            Op::Sqrt => ExprKind::Sqrt(k(0)),
            Op::Sin => ExprKind::Sin(k(0)),
            Op::Cos => ExprKind::Cos(k(0)),
            Op::Exp => ExprKind::Exp(k(0)),
            Op::Ln => ExprKind::Ln(k(0)),
        })
    }
}

/// Operator of an expression node, ignoring its children.
pub fn op_of(e: &ScalarExpr) -> Op {
    match e.kind() {
        ExprKind::Var(v) => Op::Var(v.clone()),
        ExprKind::Pi => Op::Pi,
        ExprKind::Const(c) => Op::Const(*c),
        ExprKind::Float(b) => Op::Float(*b),
        ExprKind::Neg(_) => Op::Neg,
        ExprKind::Add(..) => Op::Add,
        ExprKind::Sub(..) => Op::Sub,
        ExprKind::Mul(..) => Op::Mul,
        ExprKind::Div(..) => Op::Div,
        ExprKind::Pow(..) => Op::Pow,
        ExprKind::Sqrt(_) => Op::Sqrt,
        ExprKind::Sin(_) => Op::Sin,
        ExprKind::Cos(_) => Op::Cos,
        ExprKind::Exp(_) => Op::Exp,
        ExprKind::Ln(_) => Op::Ln,
    }
}
