//! L1-Wasserstein distance under the asymmetric directed distance.
//!
//! The primal LP optimizes a coupling on `supp(mu) x supp(nu)`. The dual LP
//! optimizes a 1-Lipschitz potential on `supp(mu) ∪ supp(nu)`, which is then
//! extended to every vertex by `f(v) = min_s f(s) + d(s, v)`; the extension
//! stays 1-Lipschitz because d satisfies the directed triangle inequality.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::digraph::{DistanceOracle, VertexIndex};
use crate::linprog::{self, Bounds, LpError, LpProblem, LpStatus, Relation, Sense};
use crate::measures::ProbabilityMeasure;

/// Accepted gap between primal and dual optima.
pub const DUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("transport LP finished with status {0:?}")]
    NotOptimal(LpStatus),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Mass moved from the first vertex to the second.
    pub pi: BTreeMap<(VertexIndex, VertexIndex), f64>,
    pub value: f64,
}

impl TransportPlan {
    /// Largest marginal mismatch against `(mu, nu)`, or the most negative entry.
    pub fn marginal_error(
        &self,
        mu: &ProbabilityMeasure,
        nu: &ProbabilityMeasure,
        n: usize,
    ) -> f64 {
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for (&(i, j), &p) in &self.pi {
            rows[i] += p;
            cols[j] += p;
            worst = worst.max(-p);
        }
        for v in 0..n {
            worst = worst.max((rows[v] - mu.mass(v)).abs());
            worst = worst.max((cols[v] - nu.mass(v)).abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzPotential {
    /// One value per vertex.
    pub f: Vec<f64>,
    pub value: f64,
}

impl LipschitzPotential {
    /// Largest excess of f(y) - f(x) over d(x, y).
    pub fn lipschitz_violation(&self, oracle: &DistanceOracle) -> f64 {
        let n = self.f.len();
        let mut worst = f64::NEG_INFINITY;
        for x in 0..n {
            for y in 0..n {
                worst = worst.max(self.f[y] - self.f[x] - oracle.get(x, y));
            }
        }
        worst
    }
}

fn optimal(problem: &LpProblem) -> Result<linprog::LpSolution, TransportError> {
    let sol = linprog::solve(problem)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        status => Err(TransportError::NotOptimal(status)),
    }
}

/// Optimal coupling from `mu` to `nu` with cost d.
pub fn w1_primal(
    mu: &ProbabilityMeasure,
    nu: &ProbabilityMeasure,
    oracle: &DistanceOracle,
) -> Result<TransportPlan, TransportError> {
    let src: Vec<_> = mu.support().collect();
    let dst: Vec<_> = nu.support().collect();
    let (r, c) = (src.len(), dst.len());
    let cost: Vec<f64> = src
        .iter()
        .flat_map(|&i| dst.iter().map(move |&j| oracle.get(i, j)))
        .collect();
    let mut lp = LpProblem::new(Sense::Minimize, cost);
    for (a, &i) in src.iter().enumerate() {
        let terms: Vec<_> = (0..c).map(|b| (a * c + b, 1.0)).collect();
        lp.constrain_sparse(&terms, Relation::Eq, mu.mass(i));
    }
    for (b, &j) in dst.iter().enumerate() {
        let terms: Vec<_> = (0..r).map(|a| (a * c + b, 1.0)).collect();
        lp.constrain_sparse(&terms, Relation::Eq, nu.mass(j));
    }
    let sol = optimal(&lp)?;
    let mut pi = BTreeMap::new();
    for (a, &i) in src.iter().enumerate() {
        for (b, &j) in dst.iter().enumerate() {
            let p = sol.assignment[a * c + b];
            if p > 0.0 {
                pi.insert((i, j), p);
            }
        }
    }
    Ok(TransportPlan {
        pi,
        value: sol.value,
    })
}

/// Optimal 1-Lipschitz potential for sup_f sum_x f(x) (nu(x) - mu(x)).
pub fn w1_dual(
    mu: &ProbabilityMeasure,
    nu: &ProbabilityMeasure,
    oracle: &DistanceOracle,
) -> Result<LipschitzPotential, TransportError> {
    let mut support: Vec<_> = mu.support().chain(nu.support()).collect();
    support.sort_unstable();
    support.dedup();
    let k = support.len();
    let objective: Vec<f64> = support.iter().map(|&v| nu.mass(v) - mu.mass(v)).collect();
    let mut lp = LpProblem::new(Sense::Maximize, objective);
    for j in 0..k {
        lp.set_bounds(j, Bounds::FREE);
    }
    // translation invariance: pin the first support vertex
    lp.set_bounds(0, Bounds::fixed(0.0));
    for (a, &u) in support.iter().enumerate() {
        for (b, &v) in support.iter().enumerate() {
            if a != b {
                lp.constrain_sparse(&[(b, 1.0), (a, -1.0)], Relation::Le, oracle.get(u, v));
            }
        }
    }
    let sol = optimal(&lp)?;
    let f = (0..oracle.len())
        .map(|v| {
            support
                .iter()
                .zip(&sol.assignment)
                .map(|(&s, &fs)| fs + oracle.get(s, v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(LipschitzPotential {
        f,
        value: sol.value,
    })
}

/// W1(mu, nu) via the primal LP.
pub fn w1(
    mu: &ProbabilityMeasure,
    nu: &ProbabilityMeasure,
    oracle: &DistanceOracle,
) -> Result<f64, TransportError> {
    w1_primal(mu, nu, oracle).map(|p| p.value)
}

/// Whether W1 of the mixtures stays below the mixture of W1 values.
pub fn w1_convexity_check(
    mu1: &ProbabilityMeasure,
    mu2: &ProbabilityMeasure,
    nu1: &ProbabilityMeasure,
    nu2: &ProbabilityMeasure,
    lambda: f64,
    oracle: &DistanceOracle,
) -> Result<bool, TransportError> {
    let lhs = w1(&mu1.mix(lambda, nu1), &mu2.mix(lambda, nu2), oracle)?;
    let rhs = lambda * w1(mu1, mu2, oracle)? + (1.0 - lambda) * w1(nu1, nu2, oracle)?;
    Ok(lhs <= rhs + DUALITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{BetaPolicy, DiGraph, EdgeSpec};
    use crate::measures::mu_alpha;

    fn build(n: usize, edges: &[(usize, usize)], beta: f64) -> DiGraph {
        let ids: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
        let specs: Vec<_> = edges
            .iter()
            .map(|&(t, h)| EdgeSpec::new(&ids[t], &ids[h], 1.0, 1.0))
            .collect();
        DiGraph::build(&ids, &specs, &BetaPolicy::Constant(beta)).unwrap()
    }

    fn triangle(beta: f64) -> DiGraph {
        build(3, &[(0, 1), (1, 2), (2, 0), (0, 2)], beta)
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let mu = mu_alpha(&g, 0, 0.3).unwrap();
        let plan = w1_primal(&mu, &mu, &d).unwrap();
        assert!(plan.value.abs() < 1e-12);
        for (&(i, j), &p) in &plan.pi {
            assert!(i == j || p < 1e-12);
        }
        let pot = w1_dual(&mu, &mu, &d).unwrap();
        assert!(pot.value.abs() < 1e-12);
    }

    #[test]
    fn dirac_to_dirac_costs_distance() {
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let v = w1(
            &ProbabilityMeasure::dirac(1),
            &ProbabilityMeasure::dirac(0),
            &d,
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_cycle_transport() {
        let g = build(2, &[(0, 1), (1, 0)], 0.5);
        let d = g.shortest_distances();
        for alpha in [0.6, 0.75, 0.9, 0.99] {
            let mu = mu_alpha(&g, 0, alpha).unwrap();
            let nu = mu_alpha(&g, 1, alpha).unwrap();
            let plan = w1_primal(&mu, &nu, &d).unwrap();
            assert!((plan.value - (2.0 * alpha - 1.0)).abs() < 1e-12);
            assert!(plan.marginal_error(&mu, &nu, 2) < 1e-9);
            let pot = w1_dual(&mu, &nu, &d).unwrap();
            assert!((pot.value - plan.value).abs() < DUALITY_TOL);
            assert!(pot.lipschitz_violation(&d) < 1e-9);
        }
    }

    #[test]
    fn triangle_case_values() {
        let alpha = 0.9;
        // beta = 0.2: W1(mu_v1, mu_v2) = alpha + 3/5 (1 - alpha)
        let g = triangle(0.2);
        let d = g.shortest_distances();
        let v = w1(
            &mu_alpha(&g, 0, alpha).unwrap(),
            &mu_alpha(&g, 1, alpha).unwrap(),
            &d,
        )
        .unwrap();
        assert!((v - (alpha + 0.6 * (1.0 - alpha))).abs() < 1e-12);

        // beta = 0.5: W1(mu_v3, mu_v1) = alpha - 3/4 (1 - alpha)
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let (mu, nu) = (
            mu_alpha(&g, 2, alpha).unwrap(),
            mu_alpha(&g, 0, alpha).unwrap(),
        );
        let pot = w1_dual(&mu, &nu, &d).unwrap();
        assert!((pot.value - 0.825).abs() < 1e-12);
        // and W1(mu_v1, mu_v2) = alpha
        let v = w1(&nu, &mu_alpha(&g, 1, alpha).unwrap(), &d).unwrap();
        assert!((v - alpha).abs() < 1e-12);
    }

    #[test]
    fn convexity_boundary_cases() {
        let g = triangle(0.2);
        let d = g.shortest_distances();
        let m: Vec<_> = (0..3).map(|x| mu_alpha(&g, x, 0.4).unwrap()).collect();
        assert!(w1_convexity_check(&m[0], &m[1], &m[2], &m[0], 0.0, &d).unwrap());
        assert!(w1_convexity_check(&m[0], &m[1], &m[2], &m[0], 1.0, &d).unwrap());
    }

    #[test]
    fn asymmetry_witness_on_triangle() {
        let g = triangle(0.2);
        let d = g.shortest_distances();
        let alpha = 0.9;
        let mu = mu_alpha(&g, 2, alpha).unwrap();
        let nu = mu_alpha(&g, 0, alpha).unwrap();
        let forward = w1(&mu, &nu, &d).unwrap();
        let backward = w1(&nu, &mu, &d).unwrap();
        // alpha - 3/10 (1 - alpha) against alpha - 3/5 (1 - alpha)
        assert!((forward - (alpha - 0.3 * (1.0 - alpha))).abs() < 1e-12);
        assert!((backward - (alpha - 0.6 * (1.0 - alpha))).abs() < 1e-12);
        assert!((forward - backward).abs() > 1e-3);
    }
}
