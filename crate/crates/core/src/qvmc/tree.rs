use std::fmt::{self, Write as _};

use super::perm::PermSpec;
use crate::kernels::{ExprId, ModuleBuilder};
use crate::matrix::Matrix;
use crate::qcir::ParamBinding;

/// One index of a tensor: a wire segment of the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    pub edge: usize,
    pub qudit: usize,
    pub dim: usize,
    /// Output (row) side of the operator, as opposed to input.
    pub out: bool,
}

/// How a node's result sits in its buffer: a tensor over `legs`, stored as
/// a matrix whose rows are the first `rows` legs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub legs: Vec<Leg>,
    pub rows: usize,
}

impl Layout {
    pub fn shape(&self) -> (usize, usize) {
        let r = self.legs[..self.rows].iter().map(|l| l.dim).product();
        let c = self.legs[self.rows..].iter().map(|l| l.dim).product();
        (r, c)
    }

    pub fn len(&self) -> usize {
        self.legs.iter().map(|l| l.dim).product()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn outs(&self) -> impl Iterator<Item = &Leg> {
        self.legs.iter().filter(|l| l.out)
    }

    pub fn ins(&self) -> impl Iterator<Item = &Leg> {
        self.legs.iter().filter(|l| !l.out)
    }

    /// Outputs as rows, inputs as columns, each side in leg order.
    pub fn is_operator(&self) -> bool {
        self.legs[..self.rows].iter().all(|l| l.out) && self.legs[self.rows..].iter().all(|l| !l.out)
    }

    /// Outputs then inputs, each sorted by qudit then edge.
    pub fn canonical(&self) -> Layout {
        let mut outs: Vec<Leg> = self.outs().copied().collect();
        let mut ins: Vec<Leg> = self.ins().copied().collect();
        outs.sort_by_key(|l| (l.qudit, l.edge));
        ins.sort_by_key(|l| (l.qudit, l.edge));
        let rows = outs.len();
        outs.extend(ins);
        Layout { legs: outs, rows }
    }

    pub fn qudits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.legs.iter().map(|l| l.qudit).collect();
        q.sort_unstable();
        q.dedup();
        q
    }

    /// The spec moving data laid out as `self` into `to`.
    pub fn perm_to(&self, to: &Layout) -> PermSpec {
        let perm = to
            .legs
            .iter()
            .map(|l| self.legs.iter().position(|m| m.edge == l.edge).expect("layouts share legs"))
            .collect();
        PermSpec {
            in_shape: self.shape(),
            dims: self.legs.iter().map(|l| l.dim).collect(),
            perm,
            out_shape: to.shape(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Leaf { expr: ExprId, bindings: Vec<ParamBinding> },
    /// Operator product `l · r`.
    MatMul(usize, usize),
    /// `l ⊗ r`.
    Kron(usize, usize),
    /// Pairwise contraction: permute each side to a matrix over the
    /// contracted legs, multiply, then optionally permute the result.
    Contract {
        l: usize,
        r: usize,
        contracted: Vec<usize>,
        left: Option<PermSpec>,
        right: Option<PermSpec>,
        out: Option<PermSpec>,
        /// Layouts the multiply expects and produces.
        left_target: Layout,
        right_target: Layout,
        product: Layout,
    },
    Perm { child: usize, spec: PermSpec },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    /// Layout of this node's result.
    pub layout: Layout,
    /// No leaf below depends on a circuit parameter.
    pub constant: bool,
}

impl Node {
    pub fn qudits(&self) -> Vec<usize> {
        self.layout.qudits()
    }

    pub fn children(&self) -> Vec<usize> {
        match &self.kind {
            NodeKind::Leaf { .. } => vec![],
            NodeKind::MatMul(l, r) | NodeKind::Kron(l, r) | NodeKind::Contract { l, r, .. } => vec![*l, *r],
            NodeKind::Perm { child, .. } => vec![*child],
        }
    }
}

/// A circuit as a tree of products, contractions, and permutations over
/// gate expressions.
#[derive(Clone, Debug)]
pub struct ExprTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub radices: Vec<usize>,
    pub num_params: usize,
}

impl ExprTree {
    pub fn root(&self) -> &Node {
        &self.nodes[self.root]
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Nodes reachable from the root, children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        fn walk(t: &ExprTree, i: usize, out: &mut Vec<usize>) {
            for c in t.nodes[i].children() {
                walk(t, c, out);
            }
            out.push(i);
        }
        let mut out = Vec::new();
        walk(self, self.root, &mut out);
        out
    }

    pub fn count(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.post_order().into_iter().filter(|&i| pred(&self.nodes[i].kind)).count()
    }

    pub fn num_leaves(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Leaf { .. }))
    }

    /// Permutations the tree lowers to.
    pub fn num_perms(&self) -> usize {
        self.post_order()
            .into_iter()
            .map(|i| match &self.nodes[i].kind {
                NodeKind::Contract { left, right, out, .. } => {
                    left.is_some() as usize + right.is_some() as usize + out.is_some() as usize
                }
                NodeKind::Perm { .. } => 1,
                _ => 0,
            })
            .sum()
    }

    /// Floating-point operations of the contractions alone, counting
    /// `2·m·k·n` per matrix product.
    pub fn contraction_flops(&self) -> f64 {
        self.post_order()
            .into_iter()
            .map(|i| match &self.nodes[i].kind {
                NodeKind::Contract { left_target, right_target, .. } => {
                    let (m, k) = left_target.shape();
                    let n = right_target.shape().1;
                    2.0 * (m * k * n) as f64
                }
                _ => 0.0,
            })
            .sum()
    }

    /// Floating-point operations of every product in the tree.
    pub fn flops(&self) -> f64 {
        self.contraction_flops()
            + self
                .post_order()
                .into_iter()
                .map(|i| match &self.nodes[i].kind {
                    NodeKind::MatMul(l, r) => {
                        let (m, k) = self.nodes[*l].layout.shape();
                        2.0 * (m * k * self.nodes[*r].layout.shape().1) as f64
                    }
                    NodeKind::Kron(..) => self.nodes[i].layout.len() as f64,
                    _ => 0.0,
                })
                .sum::<f64>()
    }

    /// Evaluate directly with matrix arithmetic, evaluating leaves from
    /// their symbolic expressions.
    pub fn evaluate(&self, exprs: &ModuleBuilder, params: &[f64]) -> Matrix<f64> {
        self.eval_node(self.root, exprs, params)
    }

    fn eval_node(&self, i: usize, exprs: &ModuleBuilder, params: &[f64]) -> Matrix<f64> {
        let node = &self.nodes[i];
        let permute = |m: &Matrix<f64>, spec: &PermSpec| {
            let mut out = Matrix::zeros(spec.out_shape.0, spec.out_shape.1);
            spec.apply(m.data(), out.data_mut()).expect("spec fits");
            out
        };
        match &node.kind {
            NodeKind::Leaf { expr, bindings } => {
                let values: Vec<f64> = bindings.iter().map(|b| b.value(params)).collect();
                exprs.expr(*expr).eval_numeric(&values).expect("leaf evaluates")
            }
            NodeKind::MatMul(l, r) => self.eval_node(*l, exprs, params).matmul(&self.eval_node(*r, exprs, params)),
            NodeKind::Kron(l, r) => self.eval_node(*l, exprs, params).kron(&self.eval_node(*r, exprs, params)),
            NodeKind::Contract { l, r, left, right, out, left_target, right_target, .. } => {
                let reshape = |m: Matrix<f64>, spec: &Option<PermSpec>, shape: (usize, usize)| match spec {
                    Some(s) => permute(&m, s),
                    None => Matrix::from_vec(shape.0, shape.1, m.into_vec()),
                };
                let a = reshape(self.eval_node(*l, exprs, params), left, left_target.shape());
                let b = reshape(self.eval_node(*r, exprs, params), right, right_target.shape());
                reshape(a.matmul(&b), out, node.layout.shape())
            }
            NodeKind::Perm { child, spec } => permute(&self.eval_node(*child, exprs, params), spec),
        }
    }

    /// An indented listing of the tree.
    pub fn dump(&self, exprs: &ModuleBuilder) -> String {
        let mut s = String::new();
        self.dump_node(self.root, 0, exprs, &mut s);
        s
    }

    fn dump_node(&self, i: usize, depth: usize, exprs: &ModuleBuilder, s: &mut String) {
        let node = &self.nodes[i];
        let pad = "  ".repeat(depth);
        let qs: Vec<String> = node.qudits().iter().map(|q| q.to_string()).collect();
        let tag = if node.constant { " const" } else { "" };
        let _ = match &node.kind {
            NodeKind::Leaf { expr, bindings } => {
                let bs: Vec<String> = bindings.iter().map(binding_str).collect();
                writeln!(s, "{pad}leaf k{expr} {} q[{}] ({}){tag}", exprs.expr(*expr).name(), qs.join(","), bs.join(", "))
            }
            NodeKind::MatMul(..) => writeln!(s, "{pad}matmul q[{}]{tag}", qs.join(",")),
            NodeKind::Kron(..) => writeln!(s, "{pad}kron q[{}]{tag}", qs.join(",")),
            NodeKind::Contract { contracted, left, right, out, .. } => {
                let perms: Vec<&str> = [(left, "l"), (right, "r"), (out, "o")]
                    .iter()
                    .filter(|(p, _)| p.is_some())
                    .map(|(_, n)| *n)
                    .collect();
                writeln!(
                    s,
                    "{pad}contract q[{}] over {} legs, perms [{}]{tag}",
                    qs.join(","),
                    contracted.len(),
                    perms.join(",")
                )
            }
            NodeKind::Perm { spec, .. } => writeln!(s, "{pad}perm {:?}{tag}", spec.perm),
        };
        for c in node.children() {
            self.dump_node(c, depth + 1, exprs, s);
        }
    }
}

pub(crate) fn binding_str(b: &ParamBinding) -> String {
    match b {
        ParamBinding::Var(k) => format!("p{k}"),
        ParamBinding::Const(v) => format!("{v:?}"),
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}q{}", if self.out { "o" } else { "i" }, self.edge, self.qudit)
    }
}
