use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use num_complex::Complex64;

use super::{close, eval_elements, Checker};
use crate::esat::cost_of;
use crate::symexpr::{Evaluator, ExprKind, ScalarExpr, UnitaryExprMatrix};

/// A parameter map and phase with `lhs = e^{i·phase}·rhs[params := exprs]`.
#[derive(Clone, Debug)]
pub struct Witness {
    /// One entry per `rhs` parameter, in order, over `lhs`'s variables.
    pub assignment: Vec<(String, ScalarExpr)>,
    pub phase: ScalarExpr,
}

/// Result of [`Checker::find_congruence`].
#[derive(Clone, Debug)]
pub struct CongruenceSearch {
    pub witness: Option<Witness>,
    /// Candidate maps whose numeric check was attempted.
    pub candidates_tried: usize,
    /// Candidates that passed the numeric filter and went to saturation.
    pub symbolic_checks: usize,
    /// The budget ran out before the candidate space was exhausted.
    pub incomplete: bool,
}

// Guard against unbounded enumeration when the alphabet is large.
const MAX_CANDIDATES: usize = 2_000_000;
const FILTER_POINTS: usize = 4;

/// Replace `var/const` and `var·const` subterms shared by at least two
/// elements with fresh variables, when that removes the variable entirely.
fn introduce_fresh(u: &UnitaryExprMatrix) -> (UnitaryExprMatrix, Vec<(String, ScalarExpr)>) {
    fn scaled_var(e: &ScalarExpr) -> Option<&str> {
        match e.kind() {
            ExprKind::Div(a, b) if b.as_const().is_some() => a.as_var(),
            ExprKind::Mul(a, b) if b.as_const().is_some() => a.as_var(),
            ExprKind::Mul(a, b) if a.as_const().is_some() => b.as_var(),
            _ => None,
        }
    }
    fn collect(e: &ScalarExpr, out: &mut Vec<ScalarExpr>, seen: &mut HashSet<usize>) {
        if !seen.insert(e.node_id()) {
            return;
        }
        if scaled_var(e).is_some() && !out.contains(e) {
            out.push(e.clone());
        }
        for c in e.children() {
            collect(c, out, seen);
        }
    }
    // Distinct candidate subterms in first-appearance order, with the
    // number of elements each occurs in.
    let mut order: Vec<ScalarExpr> = Vec::new();
    let mut counts: HashMap<ScalarExpr, usize> = HashMap::new();
    for el in u.elements() {
        let mut here = Vec::new();
        let mut seen = HashSet::new();
        collect(&el.re, &mut here, &mut seen);
        collect(&el.im, &mut here, &mut seen);
        for t in here {
            if !order.contains(&t) {
                order.push(t.clone());
            }
            *counts.entry(t).or_default() += 1;
        }
    }
    let taken: HashSet<String> = u.free_vars().into_iter().collect();
    let mut fresh: Vec<(String, ScalarExpr)> = Vec::new();
    let mut current = u.clone();
    for t in order {
        if counts[&t] < 2 {
            continue;
        }
        let var = scaled_var(&t).unwrap().to_string();
        let name = (0..).map(|k| format!("{var}'{}", "'".repeat(k))).find(|n| !taken.contains(n)).unwrap();
        let name = if fresh.iter().any(|(n, _)| *n == name) { format!("{name}{}", fresh.len()) } else { name };
        let replaced = current.with_elements(
            current
                .elements()
                .iter()
                .map(|e| e.map(|s| replace_subterm(s, &t, &ScalarExpr::var(&name))))
                .collect(),
        );
        // Only keep the rewrite if the original variable is gone.
        if replaced.free_vars().contains(&var) {
            continue;
        }
        fresh.push((name, t));
        current = replaced;
    }
    let params = current.free_vars();
    let out = UnitaryExprMatrix::new(current.name(), current.radices().to_vec(), params, current.elements().to_vec())
        .expect("fresh variables are valid parameters");
    (out, fresh)
}

fn replace_subterm(e: &ScalarExpr, target: &ScalarExpr, with: &ScalarExpr) -> ScalarExpr {
    e.map_bottom_up(&mut |node, kids| if node == target { with.clone() } else { node.rebuild(kids) })
}

/// Candidate expressions for one parameter, cheapest first.
fn alphabet(vars: &[String]) -> Vec<ScalarExpr> {
    let pi = ScalarExpr::pi;
    let two = || ScalarExpr::int(2);
    let half_pi = || pi().div(&two());
    let mut out: Vec<ScalarExpr> = Vec::new();
    for v in vars {
        let x = ScalarExpr::var(v);
        out.push(x.clone());
        out.push(x.neg());
        out.push(two().mul(&x));
        out.push(x.div(&two()));
        out.push(pi().mul(&x));
        out.push(x.div(&pi()));
        out.push(two().mul(&x).div(&pi()));
        out.push(pi().mul(&x).div(&two()));
        out.push(x.add(&half_pi()));
        out.push(x.sub(&half_pi()));
    }
    for (i, a) in vars.iter().enumerate() {
        for b in &vars[i + 1..] {
            out.push(ScalarExpr::var(a).add(&ScalarExpr::var(b)));
        }
    }
    out.push(ScalarExpr::zero());
    out.push(half_pi());
    out.push(pi());
    let mut keyed: Vec<(f64, String, ScalarExpr)> = out.into_iter().map(|e| (cost_of(&e), e.to_string(), e)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    keyed.dedup_by(|a, b| a.2 == b.2);
    keyed.into_iter().map(|k| k.2).collect()
}

/// Index tuples over a cost-sorted alphabet, by total cost then
/// lexicographically.
struct Selections {
    costs: Vec<u64>,
    k: usize,
    heap: BinaryHeap<Reverse<(u64, Vec<usize>)>>,
    seen: HashSet<Vec<usize>>,
}

impl Selections {
    fn new(costs: &[f64], k: usize) -> Self {
        // Costs are multiples of 0.5; doubling makes them exact integers.
        let costs: Vec<u64> = costs.iter().map(|c| (c * 2.0).round() as u64).collect();
        let mut s = Selections { costs, k, heap: BinaryHeap::new(), seen: HashSet::new() };
        if !s.costs.is_empty() {
            let start = vec![0; k];
            s.push(start);
        }
        s
    }

    fn push(&mut self, t: Vec<usize>) {
        if self.seen.insert(t.clone()) {
            let c = t.iter().map(|&i| self.costs[i]).sum();
            self.heap.push(Reverse((c, t)));
        }
    }
}

impl Iterator for Selections {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let Reverse((_, t)) = self.heap.pop()?;
        for i in 0..self.k {
            if t[i] + 1 < self.costs.len() {
                let mut n = t.clone();
                n[i] += 1;
                self.push(n);
            }
        }
        Some(t)
    }
}

impl Checker {
    /// Search for expressions over `lhs`'s variables to substitute for
    /// `rhs`'s parameters so that the two are phase congruent.
    pub fn find_congruence(&self, lhs: &UnitaryExprMatrix, rhs: &UnitaryExprMatrix) -> CongruenceSearch {
        let start = Instant::now();
        let mut out = CongruenceSearch { witness: None, candidates_tried: 0, symbolic_checks: 0, incomplete: false };
        if lhs.dim() != rhs.dim() {
            return out;
        }
        let (fresh_lhs, fresh) = introduce_fresh(lhs);
        let vars = fresh_lhs.free_vars();
        let letters = alphabet(&vars);
        let letter_costs: Vec<f64> = letters.iter().map(cost_of).collect();
        let k = rhs.num_params();

        let points = self.sample_points(&vars, FILTER_POINTS);
        let lhs_vals: Vec<Option<Vec<Complex64>>> = points.iter().map(|env| eval_elements(fresh_lhs.elements(), env)).collect();
        let letter_vals: Vec<Vec<Option<f64>>> = points
            .iter()
            .map(|env| {
                let mut ev = Evaluator::new(env);
                letters.iter().map(|e| ev.eval(e).ok()).collect()
            })
            .collect();

        for sel in Selections::new(&letter_costs, k) {
            if out.candidates_tried >= MAX_CANDIDATES || start.elapsed() >= self.search_budget {
                out.incomplete = true;
                return out;
            }
            out.candidates_tried += 1;
            if !self.numeric_filter(&sel, &lhs_vals, &letter_vals, rhs) {
                continue;
            }
            out.symbolic_checks += 1;
            let map: HashMap<String, ScalarExpr> =
                rhs.params().iter().cloned().zip(sel.iter().map(|&i| letters[i].clone())).collect();
            let Ok(candidate) = rhs.substitute(&map) else { continue };
            let pc = self.check_phase_congruent(&fresh_lhs, &candidate);
            if let Ok(phase) = pc.phase {
                let back: HashMap<String, ScalarExpr> = fresh.iter().cloned().collect();
                let assignment = rhs
                    .params()
                    .iter()
                    .zip(&sel)
                    .map(|(p, &i)| (p.clone(), self.tidy(&letters[i].substitute(&back))))
                    .collect();
                out.witness = Some(Witness { assignment, phase: self.tidy(&phase.substitute(&back)) });
                return out;
            }
        }
        out
    }

    fn tidy(&self, e: &ScalarExpr) -> ScalarExpr {
        self.simplifier.simplify(e)
    }

    /// Whether the substituted right side is a unit multiple of the left at
    /// every filter point.
    fn numeric_filter(
        &self,
        sel: &[usize],
        lhs_vals: &[Option<Vec<Complex64>>],
        letter_vals: &[Vec<Option<f64>>],
        rhs: &UnitaryExprMatrix,
    ) -> bool {
        for (p, lv) in lhs_vals.iter().enumerate() {
            let Some(lv) = lv else { continue };
            let Some(params) = sel.iter().map(|&i| letter_vals[p][i]).collect::<Option<Vec<f64>>>() else {
                return false;
            };
            let Ok(rv) = rhs.eval_numeric(&params) else { return false };
            let rv = rv.data();
            let Some(k) = lv.iter().position(|z| z.norm() > 1e-9) else { continue };
            if rv[k].norm() < 1e-12 {
                return false;
            }
            let q = lv[k] / rv[k];
            if (q.norm() - 1.0).abs() > 1e-7 || lv.iter().zip(rv).any(|(a, b)| !close(*a, q * b, 1e-7)) {
                return false;
            }
        }
        true
    }
}
