//! Small reference graphs with unit lengths and unit weights.

use std::collections::HashMap;

use crate::digraph::{BetaPolicy, DiGraph, EdgeSpec};

fn ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

/// Directed n-cycle v1 -> v2 -> ... -> vn -> v1.
pub fn cycle(n: usize, beta: BetaPolicy) -> DiGraph {
    let ids = ids(n);
    let edges: Vec<_> = (0..n)
        .map(|i| EdgeSpec::new(&ids[i], &ids[(i + 1) % n], 1.0, 1.0))
        .collect();
    DiGraph::build(&ids, &edges, &beta).expect("cycles are strongly connected")
}

/// 3-cycle with per-node balancing factors.
pub fn cycle3_per_node(betas: [f64; 3]) -> DiGraph {
    let map: HashMap<String, f64> = ids(3).into_iter().zip(betas).collect();
    cycle(3, BetaPolicy::PerNode(map))
}

/// 3-cycle plus the chord v1 -> v3. Edge order: v1->v2, v2->v3, v3->v1, v1->v3.
pub fn nonsymmetric_triangle(beta: BetaPolicy) -> DiGraph {
    let ids = ids(3);
    let edges =
        [(0, 1), (1, 2), (2, 0), (0, 2)].map(|(t, h)| EdgeSpec::new(&ids[t], &ids[h], 1.0, 1.0));
    DiGraph::build(&ids, &edges, &beta).expect("triangle is strongly connected")
}
