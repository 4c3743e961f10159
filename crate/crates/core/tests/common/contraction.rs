//! Exhaustive contraction-order search over small tensor networks.

use std::collections::HashMap;

/// A tensor given by its legs as (edge id, extent). An edge shared by two
/// tensors is contracted; an edge on one tensor only stays open.
pub type TensorLegs = Vec<(usize, usize)>;

/// Fewest flops, counting `2·m·k·n` per pairwise product, over every
/// contraction order that only joins tensors sharing an edge.
pub fn optimal_flops(tensors: &[TensorLegs]) -> f64 {
    let n = tensors.len();
    assert!(n <= 20, "too many tensors for subset search");
    let full = (1usize << n) - 1;
    // Per subset: open legs with extents.
    let mut open: Vec<HashMap<usize, usize>> = vec![HashMap::new(); full + 1];
    for s in 1..=full {
        let i = s.trailing_zeros() as usize;
        let mut legs = open[s & (s - 1)].clone();
        for &(e, d) in &tensors[i] {
            if legs.remove(&e).is_none() {
                legs.insert(e, d);
            }
        }
        open[s] = legs;
    }
    let size = |s: usize| open[s].values().map(|&d| d as f64).product::<f64>();
    let mut best = vec![f64::INFINITY; full + 1];
    for i in 0..n {
        best[1 << i] = 0.0;
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        // Enumerate splits with the lowest tensor on the left.
        let rest = s ^ low;
        let mut sub = rest;
        loop {
            let a = low | sub;
            let b = s ^ a;
            if b != 0 && best[a].is_finite() && best[b].is_finite() {
                let shared: f64 =
                    open[a].iter().filter(|(e, _)| open[b].contains_key(e)).map(|(_, &d)| d as f64).product();
                let any_shared = open[a].keys().any(|e| open[b].contains_key(e));
                if any_shared {
                    let cost = best[a] + best[b] + 2.0 * size(a) * size(b) / shared;
                    if cost < best[s] {
                        best[s] = cost;
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    best[full]
}
