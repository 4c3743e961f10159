use std::fmt;
use std::time::{Duration, Instant};

use super::egraph::EGraph;
use super::language::{Id, Op};
use super::pattern::{Pattern, Subst};
use super::rules::RuleSet;

/// Bounds on one saturation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SaturationLimits {
    pub max_iterations: usize,
    pub max_nodes: usize,
    pub time_limit: Duration,
}

impl Default for SaturationLimits {
    fn default() -> Self {
        SaturationLimits { max_iterations: 30, max_nodes: 50_000, time_limit: Duration::from_secs(10) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No rule changed the graph.
    Saturated,
    IterationLimit,
    NodeLimit,
    TimeLimit,
    /// The caller's goal held.
    GoalReached,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Saturated => "saturated",
            StopReason::IterationLimit => "iteration limit",
            StopReason::NodeLimit => "node limit",
            StopReason::TimeLimit => "time limit",
            StopReason::GoalReached => "goal reached",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaturationReport {
    pub iterations: usize,
    pub nodes: usize,
    pub classes: usize,
    pub elapsed: Duration,
    pub stop_reason: StopReason,
}

impl fmt::Display for SaturationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations, {} nodes in {} classes, {:.3} s",
            self.stop_reason,
            self.iterations,
            self.nodes,
            self.classes,
            self.elapsed.as_secs_f64()
        )
    }
}

// Rules that match too often are banned for a few iterations, with both the
// threshold and the ban growing each time.
const MATCH_LIMIT: usize = 1_000;
const BAN_LENGTH: usize = 5;

#[derive(Clone, Copy, Default)]
struct RuleStats {
    times_banned: u32,
    banned_until: usize,
}

/// Saturate until a limit is hit or no rule applies.
pub fn saturate(g: &mut EGraph, rules: &RuleSet, limits: &SaturationLimits) -> SaturationReport {
    saturate_until(g, rules, limits, |_| false)
}

/// Saturate, stopping early once `goal` holds. The goal is checked before
/// the first iteration and after every rebuild.
pub fn saturate_until(
    g: &mut EGraph,
    rules: &RuleSet,
    limits: &SaturationLimits,
    mut goal: impl FnMut(&EGraph) -> bool,
) -> SaturationReport {
    let start = Instant::now();
    let mut stats = vec![RuleStats::default(); rules.len()];
    let mut iterations = 0;
    g.rebuild();
    let report = |g: &EGraph, iterations: usize, stop_reason: StopReason| SaturationReport {
        iterations,
        nodes: g.total_size(),
        classes: g.num_classes(),
        elapsed: start.elapsed(),
        stop_reason,
    };
    if goal(g) {
        return report(g, 0, StopReason::GoalReached);
    }
    loop {
        if iterations >= limits.max_iterations {
            return report(g, iterations, StopReason::IterationLimit);
        }
        if start.elapsed() >= limits.time_limit {
            return report(g, iterations, StopReason::TimeLimit);
        }
        if g.total_size() >= limits.max_nodes {
            return report(g, iterations, StopReason::NodeLimit);
        }
        let size_before = g.total_size();
        let unions_before = g.union_count();
        let mut any_banned = false;
        // Search everything against the same snapshot, then apply.
        let class_ids: Vec<Id> = g.classes().map(|c| c.id).collect();
        let mut by_kind: Vec<Vec<Id>> = vec![Vec::new(); Op::KINDS];
        for class in g.classes() {
            let mut last = usize::MAX;
            for n in &class.nodes {
                let k = n.op.kind_index();
                if k != last {
                    by_kind[k].push(class.id);
                    last = k;
                }
            }
        }
        let mut found: Vec<(usize, Vec<(Id, Subst)>)> = Vec::new();
        let mut timed_out = false;
        for (ri, rule) in rules.rules().iter().enumerate() {
            let st = &mut stats[ri];
            if st.banned_until > iterations {
                any_banned = true;
                continue;
            }
            let threshold = MATCH_LIMIT << st.times_banned;
            let mut matches = Vec::new();
            let mut buf = Vec::new();
            let mut total = 0usize;
            let candidates = match &rule.lhs {
                Pattern::Node(op, _) => &by_kind[op.kind_index()],
                Pattern::Var(_) => &class_ids,
            };
            for &id in candidates {
                buf.clear();
                rule.lhs.search_class(g, id, &mut buf, threshold - total);
                total += buf.len();
                if total > threshold {
                    break;
                }
                for s in buf.drain(..) {
                    if rule.guards.iter().all(|gd| gd.holds(g, &s)) {
                        matches.push((id, s));
                    }
                }
            }
            if total > threshold {
                st.banned_until = iterations + (BAN_LENGTH << st.times_banned);
                st.times_banned += 1;
                any_banned = true;
                continue;
            }
            if !matches.is_empty() {
                found.push((ri, matches));
            }
            if start.elapsed() >= limits.time_limit {
                timed_out = true;
                break;
            }
        }
        let mut hit_node_limit = false;
        'apply: for (ri, matches) in &found {
            let rule = &rules.rules()[*ri];
            for (id, s) in matches {
                let new = rule.rhs.instantiate(g, s);
                g.union(*id, new);
                if g.total_size() >= limits.max_nodes {
                    hit_node_limit = true;
                    break 'apply;
                }
            }
        }
        g.rebuild();
        iterations += 1;

        if goal(g) {
            return report(g, iterations, StopReason::GoalReached);
        }
        if hit_node_limit {
            return report(g, iterations, StopReason::NodeLimit);
        }
        if timed_out || start.elapsed() >= limits.time_limit {
            return report(g, iterations, StopReason::TimeLimit);
        }
        let changed = g.total_size() != size_before || g.union_count() != unions_before;
        if !changed {
            if !any_banned {
                return report(g, iterations, StopReason::Saturated);
            }
            // Nothing else to do: lift the bans now rather than idling.
            for st in stats.iter_mut() {
                st.banned_until = 0;
            }
        }
    }
}
