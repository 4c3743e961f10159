use super::greedy::bind;
use super::tree::{ExprTree, Layout, NodeKind};
use crate::kernels::ModuleBuilder;
use crate::qcir::ParamBinding;
use crate::symexpr::{kron_elements, matmul_elements, ComplexExpr, UnitaryExprMatrix};

/// Mark every node whose leaves bind no circuit parameter.
pub fn const_prop(t: &mut ExprTree) {
    for i in t.post_order() {
        let constant = match &t.nodes[i].kind {
            NodeKind::Leaf { bindings, .. } => bindings.iter().all(|b| b.var().is_none()),
            _ => t.nodes[i].children().iter().all(|&c| t.nodes[c].constant),
        };
        t.nodes[i].constant = constant;
    }
}

/// Replace each maximal subtree of leaves, products, and Kronecker products
/// spanning at most `max_qudits` qudits by one leaf holding its symbolic
/// product.
///
/// The fused expression is composed from the registered leaf expressions
/// without further simplification, so that a fused kernel performs the same
/// floating-point operations as the unfused products.
pub fn fuse_subtrees(t: &mut ExprTree, exprs: &mut ModuleBuilder, max_qudits: usize) {
    let order = t.post_order();
    let mut fusable = vec![false; t.nodes.len()];
    for &i in &order {
        let n = &t.nodes[i];
        fusable[i] = match n.kind {
            NodeKind::Leaf { .. } => true,
            NodeKind::MatMul(..) | NodeKind::Kron(..) => n.children().iter().all(|&c| fusable[c]),
            _ => false,
        } && n.qudits().len() <= max_qudits;
    }
    let mut parent = vec![None; t.nodes.len()];
    for &i in &order {
        for c in t.nodes[i].children() {
            parent[c] = Some(i);
        }
    }
    for &i in &order {
        let maximal = fusable[i] && parent[i].is_none_or(|p| !fusable[p]);
        if !maximal || matches!(t.nodes[i].kind, NodeKind::Leaf { .. }) {
            continue;
        }
        let mut bindings = Vec::new();
        let elements = compose(t, i, exprs, &mut bindings);
        let layout = &t.nodes[i].layout;
        let radices = layout.legs[..layout.rows].iter().map(|l| l.dim).collect();
        let params = bindings.iter().map(|b: &ParamBinding| format!("p{}", b.var().unwrap())).collect();
        let u = UnitaryExprMatrix::new("fused", radices, params, elements).expect("fused expression is well formed");
        // Parameters renamed to p0.. so that equal blocks share a kernel.
        let local: Vec<String> = (0..bindings.len()).map(|k| format!("p{k}")).collect();
        let id = exprs.add_unsimplified(&u.rename_params(&local));
        t.nodes[i].kind = NodeKind::Leaf { expr: id, bindings };
    }
}

fn compose(t: &ExprTree, i: usize, exprs: &ModuleBuilder, bindings: &mut Vec<ParamBinding>) -> Vec<ComplexExpr> {
    let node = &t.nodes[i];
    match &node.kind {
        NodeKind::Leaf { expr, bindings: b } => {
            for v in b {
                if v.var().is_some() && !bindings.contains(v) {
                    bindings.push(*v);
                }
            }
            bind(exprs.expr(*expr), b).elements().to_vec()
        }
        NodeKind::MatMul(l, r) => {
            let a = compose(t, *l, exprs, bindings);
            let b = compose(t, *r, exprs, bindings);
            let (m, k) = t.nodes[*l].layout.shape();
            let n = t.nodes[*r].layout.shape().1;
            matmul_elements(&a, &b, m, k, n)
        }
        NodeKind::Kron(l, r) => {
            let a = compose(t, *l, exprs, bindings);
            let b = compose(t, *r, exprs, bindings);
            kron_elements(&a, t.nodes[*l].layout.shape().0, &b, t.nodes[*r].layout.shape().0)
        }
        _ => unreachable!("only products are fused"),
    }
}

/// Let contractions hand their unpermuted product straight to a parent
/// contraction or permutation, which then permutes once, and drop every
/// permutation that does not move data.
pub fn fuse_frpr(t: &mut ExprTree) {
    let order = t.post_order();
    for &i in &order {
        let absorbs = matches!(t.nodes[i].kind, NodeKind::Contract { .. } | NodeKind::Perm { .. });
        if !absorbs {
            continue;
        }
        for c in t.nodes[i].children() {
            if let NodeKind::Contract { out, product, .. } = &mut t.nodes[c].kind {
                if out.is_some() {
                    *out = None;
                    let raw = product.clone();
                    t.nodes[c].layout = raw;
                }
            }
        }
    }
    for &i in &order {
        let child_layout = |t: &ExprTree, c: usize| t.nodes[c].layout.clone();
        match t.nodes[i].kind.clone() {
            NodeKind::Contract { l, r, left_target, right_target, product, out, .. } => {
                let lp = child_layout(t, l).perm_to(&left_target);
                let rp = child_layout(t, r).perm_to(&right_target);
                let op = out.map(|_| product.perm_to(&product.canonical()));
                if let NodeKind::Contract { left, right, out, .. } = &mut t.nodes[i].kind {
                    *left = (!lp.is_identity()).then_some(lp);
                    *right = (!rp.is_identity()).then_some(rp);
                    *out = op.filter(|p| !p.is_identity());
                }
            }
            NodeKind::Perm { child, spec } => {
                let target = Layout { legs: t.nodes[i].layout.legs.clone(), rows: t.nodes[i].layout.rows };
                let new = child_layout(t, child).perm_to(&target);
                debug_assert_eq!(new.out_shape, spec.out_shape);
                if let NodeKind::Perm { spec, .. } = &mut t.nodes[i].kind {
                    *spec = new;
                }
            }
            _ => {}
        }
    }
    // A root permutation that moves nothing is a reshape of its child.
    if let NodeKind::Perm { child, spec } = &t.nodes[t.root].kind {
        if spec.is_identity() {
            let child = *child;
            t.nodes[child].layout = t.nodes[t.root].layout.clone();
            t.root = child;
        }
    }
}
