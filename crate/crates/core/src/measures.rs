//! Transition kernels, lazy random-walk measures and the graph Laplacian.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::digraph::{DiGraph, VertexIndex};

/// Tolerance on total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("negative or non-finite mass {mass} at vertex {vertex}")]
    InvalidMass { vertex: VertexIndex, mass: f64 },
    #[error("total mass {0} differs from 1")]
    NotNormalized(f64),
    #[error("neither in- nor out-neighbourhood is available")]
    IsolatedVertex,
}

/// A probability distribution on vertices, stored sparsely by vertex index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbabilityMeasure {
    mass: BTreeMap<VertexIndex, f64>,
}

impl ProbabilityMeasure {
    /// Builds a measure, dropping zero entries and merging repeated vertices.
    pub fn new(
        entries: impl IntoIterator<Item = (VertexIndex, f64)>,
    ) -> Result<Self, MeasureError> {
        let m = Self::collect_unchecked(entries);
        for (&vertex, &mass) in &m.mass {
            if !mass.is_finite() || mass < 0.0 {
                return Err(MeasureError::InvalidMass { vertex, mass });
            }
        }
        let total = m.total();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::NotNormalized(total));
        }
        Ok(m)
    }

    fn collect_unchecked(entries: impl IntoIterator<Item = (VertexIndex, f64)>) -> Self {
        let mut mass = BTreeMap::new();
        for (v, p) in entries {
            *mass.entry(v).or_insert(0.0) += p;
        }
        mass.retain(|_, p| *p != 0.0);
        ProbabilityMeasure { mass }
    }

    pub fn dirac(x: VertexIndex) -> Self {
        ProbabilityMeasure {
            mass: BTreeMap::from([(x, 1.0)]),
        }
    }

    pub fn mass(&self, v: VertexIndex) -> f64 {
        self.mass.get(&v).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Vertices with positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = VertexIndex> + '_ {
        self.mass.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexIndex, f64)> + '_ {
        self.mass.iter().map(|(&v, &p)| (v, p))
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (v, p) in self.iter() {
            out[v] = p;
        }
        out
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, lambda: f64, other: &ProbabilityMeasure) -> ProbabilityMeasure {
        Self::collect_unchecked(
            self.iter()
                .map(|(v, p)| (v, lambda * p))
                .chain(other.iter().map(|(v, p)| (v, (1.0 - lambda) * p))),
        )
    }

    /// Expectation of a vertex function.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.iter().map(|(v, p)| p * f[v]).sum()
    }
}

fn normalized_weights(
    items: impl Iterator<Item = (VertexIndex, f64)>,
) -> Option<ProbabilityMeasure> {
    let items: Vec<_> = items.collect();
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    if items.is_empty() || total <= 0.0 {
        return None;
    }
    Some(ProbabilityMeasure::collect_unchecked(
        items.into_iter().map(|(v, w)| (v, w / total)),
    ))
}

/// P(x, .): out-edge weights of `x`, normalized. `None` when `x` has no out-edges.
pub fn out_kernel(g: &DiGraph, x: VertexIndex) -> Option<ProbabilityMeasure> {
    normalized_weights(g.out_edges(x).iter().map(|&e| {
        let edge = g.edge(e);
        (edge.head, edge.weight)
    }))
}

/// P'(x, .): in-edge weights of `x`, normalized. `None` when `x` has no in-edges.
pub fn in_kernel(g: &DiGraph, x: VertexIndex) -> Option<ProbabilityMeasure> {
    normalized_weights(g.in_edges(x).iter().map(|&e| {
        let edge = g.edge(e);
        (edge.tail, edge.weight)
    }))
}

/// Mixes out- and in-kernels with factor `beta`, falling back to whichever
/// side exists when the other neighbourhood is empty.
pub fn balance(
    out: Option<ProbabilityMeasure>,
    inn: Option<ProbabilityMeasure>,
    beta: f64,
) -> Result<ProbabilityMeasure, MeasureError> {
    match (out, inn) {
        (Some(p), Some(q)) => Ok(p.mix(beta, &q)),
        (Some(p), None) => Ok(p),
        (None, Some(q)) => Ok(q),
        (None, None) => Err(MeasureError::IsolatedVertex),
    }
}

/// Balanced kernel row: beta(x) P(x, .) + (1 - beta(x)) P'(x, .).
pub fn balanced_kernel(g: &DiGraph, x: VertexIndex) -> ProbabilityMeasure {
    balance(out_kernel(g, x), in_kernel(g, x), g.beta(x))
        .expect("strongly connected graphs have no isolated vertices")
}

fn check_alpha(alpha: f64) -> Result<(), MeasureError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(MeasureError::AlphaOutOfRange(alpha))
    }
}

/// mu_x^alpha built from a precomputed kernel row.
pub fn lazy_measure(
    x: VertexIndex,
    row: &ProbabilityMeasure,
    alpha: f64,
) -> Result<ProbabilityMeasure, MeasureError> {
    check_alpha(alpha)?;
    Ok(ProbabilityMeasure::collect_unchecked(
        std::iter::once((x, alpha)).chain(row.iter().map(|(v, p)| (v, (1.0 - alpha) * p))),
    ))
}

/// mu_x^alpha: mass alpha at `x`, the rest spread by the balanced kernel.
pub fn mu_alpha(
    g: &DiGraph,
    x: VertexIndex,
    alpha: f64,
) -> Result<ProbabilityMeasure, MeasureError> {
    check_alpha(alpha)?;
    lazy_measure(x, &balanced_kernel(g, x), alpha)
}

/// Row-stochastic kernel evaluated once for every vertex of a graph snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    rows: Vec<ProbabilityMeasure>,
}

impl TransitionKernel {
    pub fn balanced(g: &DiGraph) -> Self {
        TransitionKernel {
            rows: (0..g.num_vertices())
                .map(|x| balanced_kernel(g, x))
                .collect(),
        }
    }

    pub fn out(g: &DiGraph) -> Self {
        TransitionKernel {
            rows: (0..g.num_vertices())
                .map(|x| out_kernel(g, x).expect("every vertex has an out-edge"))
                .collect(),
        }
    }

    pub fn inn(g: &DiGraph) -> Self {
        TransitionKernel {
            rows: (0..g.num_vertices())
                .map(|x| in_kernel(g, x).expect("every vertex has an in-edge"))
                .collect(),
        }
    }

    pub fn row(&self, x: VertexIndex) -> &ProbabilityMeasure {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[ProbabilityMeasure] {
        &self.rows
    }

    pub fn mu_alpha(&self, x: VertexIndex, alpha: f64) -> Result<ProbabilityMeasure, MeasureError> {
        lazy_measure(x, &self.rows[x], alpha)
    }

    /// (L f)(x) = f(x) - sum_y P(x, y) f(y)
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(x, row)| f[x] - row.expect(f))
            .collect()
    }

    /// Delta f = -L f
    pub fn delta(&self, f: &[f64]) -> Vec<f64> {
        self.laplacian(f).into_iter().map(|v| -v).collect()
    }
}

/// Graph Laplacian of `f` under the balanced kernel of `g`.
pub fn laplacian(g: &DiGraph, f: &[f64]) -> Vec<f64> {
    TransitionKernel::balanced(g).laplacian(f)
}
