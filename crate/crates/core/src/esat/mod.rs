//! Equality saturation over scalar expressions: an e-graph with constant
//! folding, data-driven rewrite rules, bounded saturation, and cost-based
//! extraction.

mod egraph;
mod extract;
mod language;
mod pattern;
mod rules;
mod runner;

use std::collections::HashMap;
use std::sync::Arc;

pub use egraph::{ClassData, EClass, EGraph};
pub use extract::{cost_of, extract_simultaneous, CostTable, Extractor};
pub use language::{op_of, ENode, Id, Op};
pub use pattern::{Pattern, PatternError, Subst};
pub use rules::{Guard, Rule, RuleError, RuleSet};
pub use runner::{saturate, saturate_until, SaturationLimits, SaturationReport, StopReason};

use crate::symexpr::ScalarExpr;

/// Saturation plus extraction with one configuration.
#[derive(Clone, Debug)]
pub struct Simplifier {
    pub rules: Arc<RuleSet>,
    pub limits: SaturationLimits,
    pub costs: CostTable,
}

impl Default for Simplifier {
    fn default() -> Self {
        Simplifier { rules: RuleSet::default_rules(), limits: SaturationLimits::default(), costs: CostTable::default() }
    }
}

impl Simplifier {
    pub fn with_limits(limits: SaturationLimits) -> Self {
        Simplifier { limits, ..Default::default() }
    }

    /// Simplify one expression.
    pub fn simplify(&self, e: &ScalarExpr) -> ScalarExpr {
        self.simplify_all(std::slice::from_ref(e)).0.remove(0)
    }

    /// Simplify expressions jointly in one e-graph, so that equal
    /// subterms across them come out as the same shared expression.
    pub fn simplify_all(&self, exprs: &[ScalarExpr]) -> (Vec<ScalarExpr>, SaturationReport) {
        let mut g = EGraph::new();
        let mut memo = HashMap::new();
        let roots: Vec<Id> = exprs.iter().map(|e| g.add_expr_memo(e, &mut memo)).collect();
        let report = saturate(&mut g, &self.rules, &self.limits);
        (self.extract_guarded(&g, &roots, exprs), report)
    }

    /// Extract `roots` with sharing. No output costs more than its input:
    /// if sharing with earlier roots would make a result more expensive as
    /// a tree, that root is extracted on its own instead.
    fn extract_guarded(&self, g: &EGraph, roots: &[Id], inputs: &[ScalarExpr]) -> Vec<ScalarExpr> {
        let mut x = Extractor::new(g, self.costs.clone());
        let plain = Extractor::new(g, self.costs.clone());
        roots
            .iter()
            .zip(inputs)
            .map(|(&r, input)| {
                let shared = x.extract_shared(r).expect("finite extraction");
                let input_cost = self.costs.cost_of(input);
                if self.costs.cost_of(&shared) <= input_cost {
                    return shared;
                }
                let alone = plain.extract(r).expect("finite extraction");
                if self.costs.cost_of(&alone) <= input_cost {
                    alone
                } else {
                    input.clone()
                }
            })
            .collect()
    }

    /// Whether saturation puts `a` and `b` in the same class.
    pub fn check_same_class(&self, a: &ScalarExpr, b: &ScalarExpr) -> (bool, SaturationReport) {
        let out = self.prove(&[(a.clone(), b.clone())]);
        (out.proved, out.report)
    }

    /// Whether every pair lands in one class, in a single shared e-graph.
    pub fn check_pairs(&self, pairs: &[(ScalarExpr, ScalarExpr)]) -> (bool, SaturationReport) {
        let out = self.prove(pairs);
        (out.proved, out.report)
    }

    /// Saturate all pairs in one e-graph, stopping as soon as every pair is
    /// merged, then extract each side.
    pub fn prove(&self, pairs: &[(ScalarExpr, ScalarExpr)]) -> Proof {
        let mut g = EGraph::new();
        let mut memo = HashMap::new();
        let mut roots = Vec::with_capacity(2 * pairs.len());
        let mut inputs = Vec::with_capacity(2 * pairs.len());
        for (a, b) in pairs {
            roots.push(g.add_expr_memo(a, &mut memo));
            roots.push(g.add_expr_memo(b, &mut memo));
            inputs.push(a.clone());
            inputs.push(b.clone());
        }
        let all_merged = |g: &EGraph| roots.chunks(2).all(|p| g.same_class(p[0], p[1]));
        let report = saturate_until(&mut g, &self.rules, &self.limits, all_merged);
        let proved = all_merged(&g);
        let extracted = self.extract_guarded(&g, &roots, &inputs);
        Proof { proved, report, extracted }
    }
}

/// Outcome of [`Simplifier::prove`].
#[derive(Clone, Debug)]
pub struct Proof {
    pub proved: bool,
    pub report: SaturationReport,
    /// Both sides of every pair, in order, as extracted from the final graph.
    pub extracted: Vec<ScalarExpr>,
}

/// Simplify with the default rules, limits, and costs.
pub fn simplify(e: &ScalarExpr) -> ScalarExpr {
    Simplifier::default().simplify(e)
}
