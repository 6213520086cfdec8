//! Seeded random inputs for the benchmarks.

use dirricci_core::{BetaPolicy, DiGraph, EdgeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Strongly connected digraph: a Hamiltonian cycle plus each remaining
/// ordered pair with probability `density`.
pub fn random_digraph(n: usize, density: f64, seed: u64) -> DiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (j == (i + 1) % n || rng.gen_bool(density)) {
                edges.push(EdgeSpec::new(
                    &ids[i],
                    &ids[j],
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.5..3.0),
                ));
            }
        }
    }
    DiGraph::build(&ids, &edges, &BetaPolicy::Constant(0.5)).expect("contains a Hamiltonian cycle")
}
