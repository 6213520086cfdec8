use std::collections::HashMap;

use dirricci_core::{BetaPolicy, DiGraph, EdgeSpec, GraphError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random strongly connected digraph on 2..=max_n vertices with weights in
/// [0.1, 10], lengths in [0.5, 3] and per-vertex beta in [0, 1]. Edge sets
/// are resampled until strongly connected.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> DiGraph {
    let n = rng.gen_range(2..=max_n);
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let density = rng.gen_range(0.25..0.8);
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(density) {
                    edges.push(EdgeSpec::new(
                        &ids[i],
                        &ids[j],
                        rng.gen_range(0.1..=10.0),
                        rng.gen_range(0.5..=3.0),
                    ));
                }
            }
        }
        let betas: HashMap<String, f64> = ids
            .iter()
            .map(|id| (id.clone(), rng.gen_range(0.0..=1.0)))
            .collect();
        match DiGraph::build(&ids, &edges, &BetaPolicy::PerNode(betas)) {
            Ok(g) => return g,
            Err(GraphError::NotStronglyConnected | GraphError::TooSmall { .. }) => continue,
            Err(e) => panic!("unexpected build failure: {e}"),
        }
    }
}

#[allow(dead_code)]
pub fn graphs(seed: u64, count: usize, max_n: usize) -> Vec<DiGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, max_n)).collect()
}
