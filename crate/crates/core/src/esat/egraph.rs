use std::collections::HashMap;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};

use super::language::{op_of, ENode, Id, Op};
use crate::symexpr::{rational_powi, rational_sqrt, Rational, ScalarExpr};

/// Facts tracked per e-class. Every member of a class denotes the same
/// real function, so facts from any member hold for the whole class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassData {
    /// Exact rational value, when known.
    pub constant: Option<Rational>,
    /// Strictly positive wherever defined.
    pub positive: bool,
    /// Nonzero wherever defined.
    pub nonzero: bool,
}

impl ClassData {
    /// Merge `other` into `self`; true if `self` changed.
    fn merge(&mut self, other: &ClassData) -> bool {
        let mut changed = false;
        if self.constant.is_none() && other.constant.is_some() {
            self.constant = other.constant;
            changed = true;
        }
        if !self.positive && other.positive {
            self.positive = true;
            changed = true;
        }
        if !self.nonzero && other.nonzero {
            self.nonzero = true;
            changed = true;
        }
        changed
    }
}

#[derive(Clone, Debug)]
pub struct EClass {
    pub id: Id,
    pub nodes: Vec<ENode>,
    pub data: ClassData,
    parents: Vec<(ENode, Id)>,
}

impl EClass {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Classes with a node using this one, possibly not canonical.
    pub(crate) fn parent_ids(&self) -> impl Iterator<Item = Id> + '_ {
        self.parents.iter().map(|p| p.1)
    }
}

/// An e-graph over scalar expressions with a constant-folding analysis.
#[derive(Clone, Debug, Default)]
pub struct EGraph {
    parents: Vec<Id>,
    classes: Vec<Option<EClass>>,
    memo: HashMap<ENode, Id>,
    pending: Vec<(ENode, Id)>,
    analysis_pending: Vec<(ENode, Id)>,
    clean: bool,
    unions: usize,
}

impl EGraph {
    pub fn new() -> Self {
        EGraph { clean: true, ..Default::default() }
    }

    /// Canonical representative of `id`.
    pub fn find(&self, mut id: Id) -> Id {
        while self.parents[id.index()] != id {
            id = self.parents[id.index()];
        }
        id
    }

    fn find_mut(&mut self, id: Id) -> Id {
        let root = self.find(id);
        let mut cur = id;
        while self.parents[cur.index()] != root {
            let next = self.parents[cur.index()];
            self.parents[cur.index()] = root;
            cur = next;
        }
        root
    }

    pub fn canonicalize(&self, node: &ENode) -> ENode {
        node.map_children(|c| self.find(c))
    }

    /// The class `id` belongs to.
    pub fn class(&self, id: Id) -> &EClass {
        let id = self.find(id);
        self.classes[id.index()].as_ref().expect("canonical class exists")
    }

    /// All canonical classes in id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass> {
        self.classes.iter().filter_map(|c| c.as_ref())
    }

    pub fn num_classes(&self) -> usize {
        self.classes().count()
    }

    /// Number of distinct e-nodes.
    pub fn total_size(&self) -> usize {
        self.memo.len()
    }

    /// Number of successful unions so far.
    pub fn union_count(&self) -> usize {
        self.unions
    }

    /// Whether the graph invariants hold (no rebuild pending).
    pub fn is_clean(&self) -> bool {
        self.clean
    }

    /// Class already containing `node`, if any.
    pub fn lookup(&self, node: &ENode) -> Option<Id> {
        let node = self.canonicalize(node);
        self.memo.get(&node).map(|&id| self.find(id))
    }

    pub fn add(&mut self, node: ENode) -> Id {
        let node = self.canonicalize(&node);
        if let Some(&id) = self.memo.get(&node) {
            return self.find(id);
        }
        let id = Id(self.parents.len() as u32);
        self.parents.push(id);
        let data = self.make(&node);
        for &c in node.children() {
            let c = self.find(c);
            self.classes[c.index()].as_mut().unwrap().parents.push((node.clone(), id));
        }
        self.classes.push(Some(EClass { id, nodes: vec![node.clone()], data, parents: Vec::new() }));
        self.memo.insert(node, id);
        self.modify(id);
        self.clean = false;
        id
    }

    /// Add an expression, sharing repeated subexpressions.
    pub fn add_expr(&mut self, e: &ScalarExpr) -> Id {
        let mut memo = HashMap::new();
        self.add_expr_memo(e, &mut memo)
    }

    pub(crate) fn add_expr_memo(&mut self, e: &ScalarExpr, memo: &mut HashMap<usize, Id>) -> Id {
        if let Some(&id) = memo.get(&e.node_id()) {
            return self.find(id);
        }
        let kids: Vec<Id> = e.children().into_iter().map(|c| self.add_expr_memo(c, memo)).collect();
        let id = self.add(ENode::new(op_of(e), &kids));
        memo.insert(e.node_id(), id);
        id
    }

    /// Merge two classes. Returns true if they were distinct.
    pub fn union(&mut self, a: Id, b: Id) -> bool {
        let (mut a, mut b) = (self.find_mut(a), self.find_mut(b));
        if a == b {
            return false;
        }
        self.clean = false;
        self.unions += 1;
        {
            let ca = self.classes[a.index()].as_ref().unwrap();
            let cb = self.classes[b.index()].as_ref().unwrap();
            if ca.parents.len() < cb.parents.len() {
                std::mem::swap(&mut a, &mut b);
            }
        }
        // `a` survives.
        self.parents[b.index()] = a;
        let from = self.classes[b.index()].take().unwrap();
        self.pending.extend(from.parents.iter().cloned());
        let to = self.classes[a.index()].as_mut().unwrap();
        let to_changed = to.data.merge(&from.data);
        let from_changed = from.data != to.data;
        if to_changed {
            self.analysis_pending.extend(to.parents.iter().cloned());
        }
        if from_changed {
            self.analysis_pending.extend(from.parents.iter().cloned());
        }
        to.nodes.extend(from.nodes);
        to.parents.extend(from.parents);
        self.modify(a);
        true
    }

    fn data(&self, id: Id) -> &ClassData {
        &self.class(id).data
    }

    fn make(&self, node: &ENode) -> ClassData {
        let kid = |i: usize| self.data(node.children()[i]);
        let konst = |i: usize| kid(i).constant;
        let constant: Option<Rational> = match &node.op {
            Op::Const(c) => Some(*c),
            Op::Neg => konst(0).map(|a| -a),
            Op::Add => konst(0).zip(konst(1)).and_then(|(a, b)| a.checked_add(&b)),
            Op::Sub => konst(0).zip(konst(1)).and_then(|(a, b)| a.checked_sub(&b)),
            Op::Mul => konst(0).zip(konst(1)).and_then(|(a, b)| a.checked_mul(&b)),
            Op::Div => konst(0).zip(konst(1)).and_then(|(a, b)| if b.is_zero() { None } else { a.checked_div(&b) }),
            Op::Pow => konst(0).zip(konst(1)).and_then(|(a, b)| rational_powi(&a, &b)),
            Op::Sqrt => konst(0).and_then(|a| rational_sqrt(&a)),
            Op::Sin => konst(0).filter(Zero::is_zero).map(|_| Rational::zero()),
            Op::Cos | Op::Exp => konst(0).filter(Zero::is_zero).map(|_| Rational::from_integer(1)),
            Op::Ln => konst(0).filter(|a| *a == Rational::from_integer(1)).map(|_| Rational::zero()),
            Op::Pi | Op::Var(_) | Op::Float(_) => None,
        };
        let positive = match (&node.op, constant) {
            (_, Some(c)) => c.is_positive(),
            (Op::Pi | Op::Exp, _) => true,
            (Op::Float(bits), _) => f64::from_bits(*bits) > 0.0,
            (Op::Add | Op::Mul | Op::Div, _) => kid(0).positive && kid(1).positive,
            (Op::Sqrt, _) => kid(0).positive,
            (Op::Pow, _) => kid(0).positive,
            _ => false,
        };
        let nonzero = positive
            || match (&node.op, constant) {
                (_, Some(c)) => !c.is_zero(),
                (Op::Float(bits), _) => f64::from_bits(*bits) != 0.0,
                (Op::Neg | Op::Sqrt, _) => kid(0).nonzero,
                (Op::Mul | Op::Div, _) => kid(0).nonzero && kid(1).nonzero,
                (Op::Pow, _) => kid(0).nonzero,
                _ => false,
            };
        ClassData { constant, positive, nonzero }
    }

    /// Give every class with a known value an explicit constant node.
    fn modify(&mut self, id: Id) {
        let id = self.find(id);
        let c = match self.classes[id.index()].as_ref().unwrap().data.constant {
            Some(c) => c,
            None => return,
        };
        let node = ENode::leaf(Op::Const(c));
        if self.lookup(&node) == Some(id) {
            return;
        }
        let k = self.add(node);
        self.union(id, k);
    }

    /// Restore congruence closure and the analysis invariants.
    pub fn rebuild(&mut self) {
        while !self.pending.is_empty() || !self.analysis_pending.is_empty() {
            while let Some((node, class)) = self.pending.pop() {
                let node = self.canonicalize(&node);
                let class = self.find_mut(class);
                if let Some(old) = self.memo.insert(node, class) {
                    self.union(old, class);
                }
            }
            while let Some((node, class)) = self.analysis_pending.pop() {
                let class = self.find_mut(class);
                let node = self.canonicalize(&node);
                let data = self.make(&node);
                let c = self.classes[class.index()].as_mut().unwrap();
                if c.data.merge(&data) {
                    let ps = c.parents.clone();
                    self.analysis_pending.extend(ps);
                    self.modify(class);
                }
            }
        }
        self.rebuild_classes();
        self.clean = true;
    }

    fn rebuild_classes(&mut self) {
        let parents = std::mem::take(&mut self.parents);
        let find = |mut id: Id| {
            while parents[id.index()] != id {
                id = parents[id.index()];
            }
            id
        };
        for class in self.classes.iter_mut().flatten() {
            for n in class.nodes.iter_mut() {
                for c in n.children_mut() {
                    *c = find(*c);
                }
            }
            class.nodes.sort_unstable();
            class.nodes.dedup();
            for (n, p) in class.parents.iter_mut() {
                for c in n.children_mut() {
                    *c = find(*c);
                }
                *p = find(*p);
            }
            class.parents.sort_unstable();
            class.parents.dedup();
        }
        self.parents = parents;
        // Drop stale memo keys so `total_size` counts distinct nodes.
        let memo = std::mem::take(&mut self.memo);
        for (node, id) in memo {
            let node = self.canonicalize(&node);
            let id = self.find(id);
            self.memo.insert(node, id);
        }
    }

    /// Whether `a` and `b` are known equal.
    pub fn same_class(&self, a: Id, b: Id) -> bool {
        self.find(a) == self.find(b)
    }
}
