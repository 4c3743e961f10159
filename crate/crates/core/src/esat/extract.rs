use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::egraph::EGraph;
use super::language::{op_of, ENode, Id, Op};
use crate::symexpr::ScalarExpr;

/// Per-operator costs. An expression's cost is the sum over its tree.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTable {
    costs: [f64; Op::KINDS],
}

impl Default for CostTable {
    fn default() -> Self {
        let mut costs = [0.0; Op::KINDS];
        for (op, c) in [
            (Op::Pi, 0.0),
            (Op::Var("x".into()), 0.0),
            (Op::Const(Default::default()), 0.5),
            (Op::Float(0), 0.5),
            (Op::Neg, 1.0),
            (Op::Add, 1.0),
            (Op::Sub, 1.0),
            (Op::Mul, 5.0),
            (Op::Div, 5.0),
            (Op::Sqrt, 50.0),
            (Op::Sin, 50.0),
            (Op::Cos, 50.0),
            (Op::Exp, 100.0),
            (Op::Ln, 100.0),
            (Op::Pow, 100.0),
        ] {
            costs[op.kind_index()] = c;
        }
        CostTable { costs }
    }
}

impl CostTable {
    /// Every operator costs 1: the tree size.
    pub fn uniform() -> Self {
        CostTable { costs: [1.0; Op::KINDS] }
    }

    pub fn node_cost(&self, op: &Op) -> f64 {
        self.costs[op.kind_index()]
    }

    /// Set the cost of `op`'s kind. Costs must be non-negative.
    pub fn with_cost(mut self, op: &Op, cost: f64) -> Self {
        assert!(cost >= 0.0, "costs must be non-negative");
        self.costs[op.kind_index()] = cost;
        self
    }

    /// Tree cost of an expression.
    pub fn cost_of(&self, e: &ScalarExpr) -> f64 {
        self.node_cost(&op_of(e)) + e.children().into_iter().map(|c| self.cost_of(c)).sum::<f64>()
    }
}

/// Tree cost of `e` under the default table.
pub fn cost_of(e: &ScalarExpr) -> f64 {
    CostTable::default().cost_of(e)
}

/// Greedy extractor over a clean e-graph.
///
/// Class costs are the fixpoint of `min over nodes (node cost + child costs)`.
/// Classes already extracted through [`Extractor::extract_shared`] are
/// pinned: they cost nothing and always yield the same expression, so later
/// roots reuse earlier subterms.
pub struct Extractor<'g> {
    g: &'g EGraph,
    table: CostTable,
    cost: HashMap<Id, f64>,
    pinned: HashMap<Id, ScalarExpr>,
}

impl<'g> Extractor<'g> {
    pub fn new(g: &'g EGraph, table: CostTable) -> Self {
        assert!(g.is_clean(), "rebuild the e-graph before extraction");
        let mut x = Extractor { g, table, cost: HashMap::new(), pinned: HashMap::new() };
        x.fixpoint();
        x
    }

    fn class_cost(&self, id: Id) -> f64 {
        let id = self.g.find(id);
        self.cost.get(&id).copied().unwrap_or(f64::INFINITY)
    }

    fn node_total(&self, node: &ENode) -> f64 {
        self.table.node_cost(&node.op) + node.children().iter().map(|&c| self.class_cost(c)).sum::<f64>()
    }

    fn fixpoint(&mut self) {
        loop {
            let mut changed = false;
            for class in self.g.classes() {
                if self.pinned.contains_key(&class.id) {
                    continue;
                }
                let best = class.nodes.iter().map(|n| self.node_total(n)).fold(f64::INFINITY, f64::min);
                if best < self.class_cost(class.id) {
                    self.cost.insert(class.id, best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Current best cost of class `id`.
    pub fn cost(&self, id: Id) -> f64 {
        self.class_cost(id)
    }

    /// Cheapest expression for `id`, without pinning.
    pub fn extract(&self, id: Id) -> Option<ScalarExpr> {
        let mut built = HashMap::new();
        self.build(self.g.find(id), &mut built, &mut HashSet::new())
    }

    /// Cheapest expression for `id`; every class it passes through is then
    /// pinned and the costs are recomputed.
    pub fn extract_shared(&mut self, id: Id) -> Option<ScalarExpr> {
        let mut built = HashMap::new();
        let out = self.build(self.g.find(id), &mut built, &mut HashSet::new())?;
        // Costs only drop, and only through parents of changed classes.
        // Settling the cheapest first keeps each class from being revisited
        // for every small improvement.
        let mut work: BinaryHeap<Reverse<(OrderedCost, Id)>> = BinaryHeap::new();
        for (cls, e) in built {
            self.cost.insert(cls, 0.0);
            self.pinned.insert(cls, e);
            work.push(Reverse((OrderedCost(0.0), cls)));
        }
        while let Some(Reverse((OrderedCost(c), id))) = work.pop() {
            if c > self.class_cost(id) {
                continue;
            }
            for p in self.g.class(id).parent_ids() {
                let p = self.g.find(p);
                if self.pinned.contains_key(&p) {
                    continue;
                }
                let best = self.g.class(p).nodes.iter().map(|n| self.node_total(n)).fold(f64::INFINITY, f64::min);
                if best < self.class_cost(p) {
                    self.cost.insert(p, best);
                    work.push(Reverse((OrderedCost(best), p)));
                }
            }
        }
        Some(out)
    }

    fn build(&self, id: Id, built: &mut HashMap<Id, ScalarExpr>, stack: &mut HashSet<Id>) -> Option<ScalarExpr> {
        if let Some(e) = self.pinned.get(&id).or_else(|| built.get(&id)) {
            return Some(e.clone());
        }
        stack.insert(id);
        let class = self.g.class(id);
        let mut best: Option<(f64, &ENode)> = None;
        for n in &class.nodes {
            if n.children().iter().any(|c| stack.contains(&self.g.find(*c))) {
                continue;
            }
            let c = self.node_total(n);
            if !c.is_finite() {
                continue;
            }
            // Nodes are sorted, so the first of equal cost has the smallest
            // operator ordinal and child ids.
            if best.map_or(true, |(bc, _)| c < bc) {
                best = Some((c, n));
            }
        }
        let (_, node) = best?;
        let node = node.clone();
        let mut kids = Vec::with_capacity(node.children().len());
        for &c in node.children() {
            kids.push(self.build(self.g.find(c), built, stack)?);
        }
        stack.remove(&id);
        let e = node.to_expr(&kids);
        built.insert(id, e.clone());
        Some(e)
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct OrderedCost(f64);

impl Eq for OrderedCost {}

impl Ord for OrderedCost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Extract every root in order, sharing subterms between them.
pub fn extract_simultaneous(g: &EGraph, roots: &[Id], table: &CostTable) -> Vec<ScalarExpr> {
    let mut x = Extractor::new(g, table.clone());
    roots.iter().map(|&r| x.extract_shared(r).expect("every class has a finite-cost member")).collect()
}
