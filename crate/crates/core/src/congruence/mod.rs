//! Equality and global-phase congruence of symbolic unitaries, and a search
//! for parameter maps that make one gate congruent to another.

mod search;

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::esat::{saturate_until, EGraph, Extractor, Id, Op, SaturationReport, Simplifier};
use crate::symexpr::{ComplexExpr, Evaluator, ScalarExpr, UnitaryExprMatrix};

pub use search::{CongruenceSearch, Witness};

const GUIDANCE_RULES: &str = include_str!("guidance.rules");

/// How element pairs share e-graphs during an equality check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GraphMode {
    /// All pairs in one e-graph.
    #[default]
    Shared,
    /// One e-graph per element.
    PerElement,
}

/// Settings for equality and congruence checks.
#[derive(Clone, Debug)]
pub struct Checker {
    pub simplifier: Simplifier,
    pub mode: GraphMode,
    /// Sample points for numeric filtering and re-verification.
    pub points: usize,
    pub tolerance: f64,
    /// Wall-clock budget for [`Checker::find_congruence`].
    pub search_budget: Duration,
    pub seed: u64,
}

impl Default for Checker {
    fn default() -> Self {
        Checker {
            simplifier: Simplifier::default(),
            mode: GraphMode::Shared,
            points: 100,
            tolerance: 1e-9,
            search_budget: Duration::from_secs(10),
            seed: 0x5eed,
        }
    }
}

/// Result of [`Checker::check_equal`].
#[derive(Clone, Debug)]
pub struct Equality {
    /// Proved equal by saturation.
    pub equal: bool,
    /// Agree at every sample point.
    pub numerically_equal: bool,
    pub reports: Vec<SaturationReport>,
}

/// Why a phase check failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhaseFailure {
    DimensionMismatch,
    /// One side has a structural zero where the other does not.
    ZeroPattern { row: usize, col: usize },
    /// The two sides differ by more than a unit-modulus factor somewhere.
    NumericMismatch,
    /// Numerically congruent, but no phase was proved.
    Unproved,
}

impl fmt::Display for PhaseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseFailure::DimensionMismatch => write!(f, "dimensions differ"),
            PhaseFailure::ZeroPattern { row, col } => write!(f, "zero patterns differ at ({row}, {col})"),
            PhaseFailure::NumericMismatch => write!(f, "not congruent at sampled points"),
            PhaseFailure::Unproved => write!(f, "numerically congruent but not proved"),
        }
    }
}

/// Result of [`Checker::check_phase_congruent`]: `a = e^{i·phase}·b`.
#[derive(Clone, Debug)]
pub struct PhaseCongruence {
    pub phase: Result<ScalarExpr, PhaseFailure>,
    pub reports: Vec<SaturationReport>,
}

impl PhaseCongruence {
    pub fn is_congruent(&self) -> bool {
        self.phase.is_ok()
    }
}

/// Variables of both matrices, first appearance order.
fn joint_vars(a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> Vec<String> {
    let mut vars = a.free_vars();
    for v in b.free_vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    for v in a.params().iter().chain(b.params()) {
        if !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    vars
}

pub(crate) fn eval_elements(elements: &[ComplexExpr], env: &HashMap<String, f64>) -> Option<Vec<Complex64>> {
    let mut ev = Evaluator::new(env);
    elements.iter().map(|e| Some(Complex64::new(ev.eval(&e.re).ok()?, ev.eval(&e.im).ok()?))).collect()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// `e^{iθ}` as a complex expression.
pub fn phase_factor(theta: &ScalarExpr) -> ComplexExpr {
    ComplexExpr::new(ScalarExpr::zero(), theta.clone()).exp()
}

/// Multiply every element by `e^{iθ}`.
pub fn apply_phase(u: &UnitaryExprMatrix, theta: &ScalarExpr) -> UnitaryExprMatrix {
    let f = phase_factor(theta);
    u.with_elements(u.elements().iter().map(|e| f.mul(e)).collect())
}

impl Checker {
    /// Random sample points over `vars`, deterministic for a given seed.
    pub fn sample_points(&self, vars: &[String], n: usize) -> Vec<HashMap<String, f64>> {
        let mut rng = StdRng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| vars.iter().map(|v| (v.clone(), rng.gen_range(-std::f64::consts::TAU..std::f64::consts::TAU))).collect())
            .collect()
    }

    /// Whether `a` and `b` agree at the sample points. Points where both
    /// sides are undefined are skipped.
    pub fn numerically_equal(&self, a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> bool {
        if a.dim() != b.dim() {
            return false;
        }
        let vars = joint_vars(a, b);
        self.sample_points(&vars, self.points).iter().all(|env| {
            match (eval_elements(a.elements(), env), eval_elements(b.elements(), env)) {
                (Some(x), Some(y)) => x.iter().zip(&y).all(|(p, q)| close(*p, *q, self.tolerance)),
                (None, None) => true,
                _ => false,
            }
        })
    }

    /// Prove `a == b` element by element, treating variables by name.
    pub fn check_equal(&self, a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> Equality {
        if a.dim() != b.dim() {
            return Equality { equal: false, numerically_equal: false, reports: vec![] };
        }
        if !self.numerically_equal(a, b) {
            return Equality { equal: false, numerically_equal: false, reports: vec![] };
        }
        let mut pairs = Vec::new();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            for (p, q) in [(&x.re, &y.re), (&x.im, &y.im)] {
                if p != q {
                    pairs.push((p.clone(), q.clone()));
                }
            }
        }
        if pairs.is_empty() {
            return Equality { equal: true, numerically_equal: true, reports: vec![] };
        }
        let (equal, reports) = match self.mode {
            GraphMode::Shared => {
                let (ok, report) = self.simplifier.check_pairs(&pairs);
                (ok, vec![report])
            }
            GraphMode::PerElement => {
                let mut reports = Vec::new();
                let mut ok = true;
                for pair in &pairs {
                    let (good, report) = self.simplifier.check_pairs(std::slice::from_ref(pair));
                    reports.push(report);
                    if !good {
                        ok = false;
                        break;
                    }
                }
                (ok, reports)
            }
        };
        Equality { equal, numerically_equal: true, reports }
    }

    /// Look for `θ` with `a = e^{iθ}·b`.
    pub fn check_phase_congruent(&self, a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> PhaseCongruence {
        let fail = |f: PhaseFailure, reports: Vec<SaturationReport>| PhaseCongruence { phase: Err(f), reports };
        if a.dim() != b.dim() {
            return fail(PhaseFailure::DimensionMismatch, vec![]);
        }
        let dim = a.dim();
        let mut pivot = None;
        for (k, (x, y)) in a.elements().iter().zip(b.elements()).enumerate() {
            if x.is_zero() != y.is_zero() {
                return fail(PhaseFailure::ZeroPattern { row: k / dim, col: k % dim }, vec![]);
            }
            if pivot.is_none() && !x.is_zero() {
                pivot = Some(k);
            }
        }
        let Some(k) = pivot else {
            return PhaseCongruence { phase: Ok(ScalarExpr::zero()), reports: vec![] };
        };

        // Numeric guidance: the ratio at the pivot, checked everywhere.
        let vars = joint_vars(a, b);
        let points = self.sample_points(&vars, self.points);
        let mut ratios = Vec::new();
        for env in &points {
            let (Some(x), Some(y)) = (eval_elements(a.elements(), env), eval_elements(b.elements(), env)) else {
                continue;
            };
            if y[k].norm() < 1e-12 {
                continue;
            }
            let q = x[k] / y[k];
            if (q.norm() - 1.0).abs() > 1e-7 || x.iter().zip(&y).any(|(p, r)| !close(*p, q * r, 1e-7)) {
                return fail(PhaseFailure::NumericMismatch, vec![]);
            }
            ratios.push((env.clone(), q));
        }
        if ratios.is_empty() {
            return fail(PhaseFailure::NumericMismatch, vec![]);
        }

        let mut reports = Vec::new();
        let mut candidates = Vec::new();
        if ratios.iter().all(|(_, q)| close(*q, Complex64::new(1.0, 0.0), 1e-7)) {
            candidates.push(ScalarExpr::zero());
        } else if ratios.iter().all(|(_, q)| close(*q, Complex64::new(-1.0, 0.0), 1e-7)) {
            candidates.push(ScalarExpr::pi());
        } else {
            let q = a.elements()[k].div(&b.elements()[k]);
            let (found, report) = self.extract_angle(&q, &ratios);
            reports.push(report);
            candidates.extend(found);
        }
        for theta in candidates {
            let shifted = apply_phase(b, &theta);
            let eq = self.check_equal(a, &shifted);
            reports.extend(eq.reports);
            if eq.equal && self.numerically_equal(a, &shifted) {
                return PhaseCongruence { phase: Ok(theta), reports };
            }
        }
        fail(PhaseFailure::Unproved, reports)
    }

    /// Saturate the ratio `q` until its imaginary part has a `sin(θ)` member
    /// whose argument matches the sampled ratios; candidates come back
    /// cheapest first.
    fn extract_angle(&self, q: &ComplexExpr, ratios: &[(HashMap<String, f64>, Complex64)]) -> (Vec<ScalarExpr>, SaturationReport) {
        let mut g = EGraph::new();
        let im = g.add_expr(&q.im);
        let mut found = Vec::new();
        let costs = self.simplifier.costs.clone();
        let check = |theta: &ScalarExpr| {
            ratios.iter().take(20).all(|(env, r)| {
                let mut ev = Evaluator::new(env);
                ev.eval(theta).is_ok_and(|t| close(Complex64::new(t.cos(), t.sin()), *r, 1e-7))
            })
        };
        let scan = |g: &EGraph, found: &mut Vec<ScalarExpr>| {
            let x = Extractor::new(g, costs.clone());
            let mut cands: Vec<(f64, ScalarExpr)> = Vec::new();
            for node in &g.class(im).nodes {
                if node.op != Op::Sin {
                    continue;
                }
                let arg: Id = node.children()[0];
                if let Some(theta) = x.extract(arg) {
                    if check(&theta) {
                        cands.push((x.cost(arg), theta));
                    }
                }
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0));
            *found = cands.into_iter().map(|c| c.1).collect();
            !found.is_empty()
        };
        let rules = self.simplifier.rules.extended(GUIDANCE_RULES).expect("guidance rules parse");
        let report = saturate_until(&mut g, &rules, &self.simplifier.limits, |g| scan(g, &mut found));
        (found, report)
    }
}
