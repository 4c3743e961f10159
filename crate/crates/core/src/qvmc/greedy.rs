use std::collections::HashMap;

use super::tree::{ExprTree, Layout, Leg, Node, NodeKind};
use super::{CompileError, CompileOptions};
use crate::kernels::ModuleBuilder;
use crate::qcir::{Circuit, Operation, ParamBinding};
use crate::symexpr::{ComplexExpr, ScalarExpr, UnitaryExprMatrix};

/// Cost of one pairwise contraction and the layouts it uses.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub contracted: Vec<usize>,
    pub left_target: Layout,
    pub right_target: Layout,
    pub product: Layout,
    pub result: Layout,
    pub flops: f64,
    pub moves: f64,
}

impl Plan {
    pub fn cost(&self) -> f64 {
        self.flops + self.moves
    }
}

/// Contract `l` with `r` as `l`'s kept legs against `r`'s kept legs.
pub(crate) fn plan(l: &Layout, r: &Layout) -> Option<Plan> {
    let contracted: Vec<usize> =
        l.legs.iter().map(|x| x.edge).filter(|e| r.legs.iter().any(|y| y.edge == *e)).collect();
    if contracted.is_empty() {
        return None;
    }
    let is_c = |leg: &Leg| contracted.contains(&leg.edge);
    let kept_l: Vec<Leg> = l.legs.iter().copied().filter(|x| !is_c(x)).collect();
    let kept_r: Vec<Leg> = r.legs.iter().copied().filter(|x| !is_c(x)).collect();
    let shared: Vec<Leg> = l.legs.iter().copied().filter(is_c).collect();
    let left_target = Layout { rows: kept_l.len(), legs: kept_l.iter().chain(&shared).copied().collect() };
    let right_target = Layout {
        rows: shared.len(),
        legs: shared.iter().map(|s| *r.legs.iter().find(|x| x.edge == s.edge).unwrap()).chain(kept_r.iter().copied()).collect(),
    };
    let product = Layout { rows: kept_l.len(), legs: kept_l.iter().chain(&kept_r).copied().collect() };
    let result = product.canonical();
    let (m, k) = left_target.shape();
    let n = right_target.shape().1;
    let mut moves = 0.0;
    for (from, to) in [(l, &left_target), (r, &right_target), (&product, &result)] {
        if !from.perm_to(to).is_identity() {
            moves += from.len() as f64;
        }
    }
    Some(Plan { contracted, left_target, right_target, product, result, flops: 2.0 * (m * k * n) as f64, moves })
}

/// The cheaper orientation of a contraction of `a` and `b`; `true` when `a`
/// goes on the left.
fn best_plan(a: &Layout, b: &Layout) -> Option<(Plan, bool)> {
    let ab = plan(a, b)?;
    let ba = plan(b, a)?;
    Some(if ba.cost() < ab.cost() { (ba, false) } else { (ab, true) })
}

struct Tensor {
    node: usize,
    layout: Layout,
}

/// The symbolic unitary of a unitary-only circuit, over parameters `p0..`.
pub fn circuit_expression(c: &Circuit) -> Result<UnitaryExprMatrix, CompileError> {
    let names: Vec<String> = (0..c.num_params()).map(|k| format!("p{k}")).collect();
    let mut u = UnitaryExprMatrix::identity(c.radices().to_vec());
    for r in c.iter_dag() {
        let instr = c.instruction(r);
        let (g, bindings) = match &instr.op {
            Operation::Gate { gate, params } => (c.gate_set().get(*gate).unwrap().clone(), params),
            Operation::Subcircuit { circuit, params } => (circuit_expression(circuit)?, params),
            _ => return Err(CompileError::NonUnitary),
        };
        let g = bind(&g, bindings);
        let e = g.embed(c.radices(), &instr.qudits).map_err(|e| CompileError::Symbolic(e.to_string()))?;
        u = e.matmul_sym(&u).map_err(|e| CompileError::Symbolic(e.to_string()))?;
    }
    UnitaryExprMatrix::new("circuit", c.radices().to_vec(), names, u.elements().to_vec())
        .map_err(|e| CompileError::Symbolic(e.to_string()))
}

/// Replace `g`'s parameters by `p<k>` for variables and floats for constants.
pub(crate) fn bind(g: &UnitaryExprMatrix, bindings: &[ParamBinding]) -> UnitaryExprMatrix {
    let map: HashMap<String, ScalarExpr> = g
        .params()
        .iter()
        .zip(bindings)
        .map(|(p, b)| {
            let v = match *b {
                ParamBinding::Var(k) => ScalarExpr::var(&format!("p{k}")),
                ParamBinding::Const(v) => ScalarExpr::float(v),
            };
            (p.clone(), v)
        })
        .collect();
    let elements: Vec<ComplexExpr> = g.elements().iter().map(|e| e.substitute(&map)).collect();
    let mut params: Vec<String> = Vec::new();
    for b in bindings {
        if let ParamBinding::Var(k) = b {
            let n = format!("p{k}");
            if !params.contains(&n) {
                params.push(n);
            }
        }
    }
    UnitaryExprMatrix::new(g.name(), g.radices().to_vec(), params, elements).expect("bound parameters cover the gate")
}

/// Build the expression tree of a unitary-only circuit by greedy pairwise
/// contraction with one step of lookahead.
pub fn build_tree(c: &Circuit, exprs: &mut ModuleBuilder, opts: &CompileOptions) -> Result<ExprTree, CompileError> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut tensors: Vec<Option<Tensor>> = Vec::new();
    let n = c.num_qudits();
    let mut edge: Vec<usize> = (0..n).collect();
    let mut next_edge = n;
    let mut used = vec![false; n];

    let mut leaf = |nodes: &mut Vec<Node>, tensors: &mut Vec<Option<Tensor>>, expr, bindings, qudits: &[usize]| {
        let mut outs = Vec::new();
        let mut ins = Vec::new();
        for &q in qudits {
            let dim = c.radices()[q];
            ins.push(Leg { edge: edge[q], qudit: q, dim, out: false });
            outs.push(Leg { edge: next_edge, qudit: q, dim, out: true });
            edge[q] = next_edge;
            next_edge += 1;
        }
        let rows = outs.len();
        outs.extend(ins);
        let layout = Layout { legs: outs, rows };
        nodes.push(Node { kind: NodeKind::Leaf { expr, bindings }, layout: layout.clone(), constant: false });
        tensors.push(Some(Tensor { node: nodes.len() - 1, layout }));
    };

    for r in c.iter_dag() {
        let instr = c.instruction(r);
        let (expr, bindings) = match &instr.op {
            Operation::Gate { gate, params } => (exprs.add(c.gate_set().get(*gate).unwrap()), params.clone()),
            Operation::Subcircuit { circuit, params } => {
                let u = circuit_expression(circuit)?;
                (exprs.add_unsimplified(&u), params.clone())
            }
            _ => return Err(CompileError::NonUnitary),
        };
        for &q in &instr.qudits {
            used[q] = true;
        }
        leaf(&mut nodes, &mut tensors, expr, bindings, &instr.qudits);
    }
    for q in 0..n {
        if !used[q] {
            let id = exprs.add(&UnitaryExprMatrix::identity(vec![c.radices()[q]]));
            leaf(&mut nodes, &mut tensors, id, vec![], &[q]);
        }
    }
    if tensors.is_empty() {
        // No qudits at all: the 1×1 identity.
        let id = exprs.add(&UnitaryExprMatrix::identity(vec![]));
        nodes.push(Node { kind: NodeKind::Leaf { expr: id, bindings: vec![] }, layout: Layout { legs: vec![], rows: 0 }, constant: true });
        return Ok(ExprTree { root: 0, nodes, radices: vec![], num_params: c.num_params() });
    }

    let mut greedy = Greedy { tensors, nodes, opts };
    greedy.run();
    let Greedy { tensors, mut nodes, .. } = greedy;

    // Join what is left, lowest qudit first.
    let mut rest: Vec<Tensor> = tensors.into_iter().flatten().collect();
    rest.sort_by_key(|t| t.layout.qudits()[0]);
    let mut it = rest.into_iter();
    let mut acc = it.next().unwrap();
    for t in it {
        let layout = kron_layout(&acc.layout, &t.layout);
        nodes.push(Node { kind: NodeKind::Kron(acc.node, t.node), layout: layout.clone(), constant: false });
        acc = Tensor { node: nodes.len() - 1, layout };
    }
    let target = acc.layout.canonical();
    let root = if target.legs != acc.layout.legs || target.rows != acc.layout.rows {
        let spec = acc.layout.perm_to(&target);
        nodes.push(Node { kind: NodeKind::Perm { child: acc.node, spec }, layout: target, constant: false });
        nodes.len() - 1
    } else {
        acc.node
    };
    Ok(ExprTree { nodes, root, radices: c.radices().to_vec(), num_params: c.num_params() })
}

pub(crate) fn kron_layout(a: &Layout, b: &Layout) -> Layout {
    let mut legs: Vec<Leg> = a.legs[..a.rows].to_vec();
    legs.extend_from_slice(&b.legs[..b.rows]);
    legs.extend_from_slice(&a.legs[a.rows..]);
    legs.extend_from_slice(&b.legs[b.rows..]);
    Layout { legs, rows: a.rows + b.rows }
}

struct Greedy<'a> {
    tensors: Vec<Option<Tensor>>,
    nodes: Vec<Node>,
    opts: &'a CompileOptions,
}

impl Greedy<'_> {
    fn layout(&self, i: usize) -> &Layout {
        &self.tensors[i].as_ref().unwrap().layout
    }

    /// Active tensors sharing an edge with tensor `i`, besides `skip`.
    fn neighbours(&self, i: usize, skip: &[usize]) -> Vec<usize> {
        let l = self.layout(i);
        (0..self.tensors.len())
            .filter(|&j| j != i && !skip.contains(&j))
            .filter(|&j| match &self.tensors[j] {
                Some(t) => t.layout.legs.iter().any(|x| l.legs.iter().any(|y| y.edge == x.edge)),
                None => false,
            })
            .collect()
    }

    fn run(&mut self) {
        // Edge → tensors holding it, to enumerate adjacent pairs.
        loop {
            let mut holders: HashMap<usize, Vec<usize>> = HashMap::new();
            for (i, t) in self.tensors.iter().enumerate() {
                if let Some(t) = t {
                    for leg in &t.layout.legs {
                        holders.entry(leg.edge).or_default().push(i);
                    }
                }
            }
            let mut pairs: Vec<(usize, usize)> =
                holders.values().filter(|h| h.len() == 2).map(|h| (h[0].min(h[1]), h[0].max(h[1]))).collect();
            pairs.sort_unstable();
            pairs.dedup();
            if pairs.is_empty() {
                return;
            }
            let mut best: Option<((f64, usize, usize, usize, usize), usize, usize)> = None;
            for &(a, b) in &pairs {
                let (p, _) = best_plan(self.layout(a), self.layout(b)).unwrap();
                // Best single follow-up contraction of the result.
                let follow = self
                    .neighbours(a, &[b])
                    .into_iter()
                    .chain(self.neighbours(b, &[a]))
                    .filter_map(|c| best_plan(&p.result, self.layout(c)).map(|x| x.0.cost()))
                    .fold(f64::INFINITY, f64::min);
                let follow = if follow.is_finite() { follow } else { 0.0 };
                let qa = self.layout(a).qudits();
                let qb = self.layout(b).qudits();
                let lo = qa[0].min(qb[0]);
                let hi = qa[0].max(qb[0]);
                let key = (p.cost() + follow, lo, hi, a, b);
                if best.as_ref().is_none_or(|(k, _, _)| key.0 < k.0 || (key.0 == k.0 && (key.1, key.2, key.3, key.4) < (k.1, k.2, k.3, k.4))) {
                    best = Some((key, a, b));
                }
            }
            let (_, a, b) = best.unwrap();
            if !self.try_kron_matmul(a, b) && !self.try_kron_matmul(b, a) {
                self.contract(a, b);
            }
        }
    }

    fn contract(&mut self, a: usize, b: usize) {
        let (p, a_left) = best_plan(self.layout(a), self.layout(b)).unwrap();
        let (l, r) = if a_left { (a, b) } else { (b, a) };
        let lt = self.tensors[l].take().unwrap();
        let rt = self.tensors[r].take().unwrap();
        let kind = NodeKind::Contract {
            l: lt.node,
            r: rt.node,
            contracted: p.contracted.clone(),
            left: Some(lt.layout.perm_to(&p.left_target)),
            right: Some(rt.layout.perm_to(&p.right_target)),
            out: Some(p.product.perm_to(&p.result)),
            left_target: p.left_target,
            right_target: p.right_target,
            product: p.product,
        };
        self.push(kind, p.result);
    }

    fn push(&mut self, kind: NodeKind, layout: Layout) {
        self.nodes.push(Node { kind, layout: layout.clone(), constant: false });
        let node = self.nodes.len() - 1;
        self.tensors.push(Some(Tensor { node, layout }));
    }

    fn small(&self, i: usize) -> bool {
        self.layout(i).qudits().len() < self.opts.kron_threshold
    }

    /// When small tensor `s` sits next to `c`, and another small tensor
    /// covers the rest of `c`'s legs on the same side, form their Kronecker
    /// product and multiply it with `c` directly.
    fn try_kron_matmul(&mut self, s: usize, c: usize) -> bool {
        if !self.small(s) || self.small(c) || self.layout(c).qudits().len() != 2 {
            return false;
        }
        let cl = self.layout(c).clone();
        let sl = self.layout(s).clone();
        let c_outs: Vec<usize> = cl.outs().map(|x| x.edge).collect();
        let c_ins: Vec<usize> = cl.ins().map(|x| x.edge).collect();
        // `after`: the small tensors follow `c`.
        let after = sl.ins().all(|x| c_outs.contains(&x.edge)) && sl.ins().count() > 0;
        let before = sl.outs().all(|x| c_ins.contains(&x.edge)) && sl.outs().count() > 0;
        if !after && !before {
            return false;
        }
        let side: &[usize] = if after { &c_outs } else { &c_ins };
        let mine: Vec<usize> = if after { sl.ins().map(|x| x.edge).collect() } else { sl.outs().map(|x| x.edge).collect() };
        if sl.legs.iter().any(|x| cl.legs.iter().any(|y| y.edge == x.edge) && !mine.contains(&x.edge)) {
            return false;
        }
        let others: Vec<usize> = side.iter().copied().filter(|e| !mine.contains(e)).collect();
        let partner = (0..self.tensors.len()).find(|&t| {
            if t == s || t == c || self.tensors[t].is_none() || !self.small(t) {
                return false;
            }
            let tl = self.layout(t);
            let facing: Vec<usize> =
                if after { tl.ins().map(|x| x.edge).collect() } else { tl.outs().map(|x| x.edge).collect() };
            let mut a = facing.clone();
            let mut b = others.clone();
            a.sort_unstable();
            b.sort_unstable();
            a == b && !tl.legs.iter().any(|x| cl.legs.iter().any(|y| y.edge == x.edge) && !facing.contains(&x.edge))
                && !tl.legs.iter().any(|x| sl.legs.iter().any(|y| y.edge == x.edge))
        });
        let Some(t) = partner else { return false };
        let tl = self.layout(t).clone();
        // Order the factors to match `c`'s side.
        for (x, y, xl, yl) in [(s, t, &sl, &tl), (t, s, &tl, &sl)] {
            let k = kron_layout(xl, yl);
            let facing: Vec<usize> =
                if after { k.ins().map(|l| l.edge).collect() } else { k.outs().map(|l| l.edge).collect() };
            if facing != side {
                continue;
            }
            let xn = self.tensors[x].take().unwrap().node;
            let yn = self.tensors[y].take().unwrap().node;
            let cn = self.tensors[c].take().unwrap().node;
            self.nodes.push(Node { kind: NodeKind::Kron(xn, yn), layout: k.clone(), constant: false });
            let kn = self.nodes.len() - 1;
            let (kind, layout) = if after {
                let mut legs: Vec<Leg> = k.outs().copied().collect();
                legs.extend(cl.ins().copied());
                (NodeKind::MatMul(kn, cn), Layout { legs, rows: k.rows })
            } else {
                let mut legs: Vec<Leg> = cl.outs().copied().collect();
                legs.extend(k.ins().copied());
                (NodeKind::MatMul(cn, kn), Layout { legs, rows: cl.rows })
            };
            self.push(kind, layout);
            return true;
        }
        false
    }
}
