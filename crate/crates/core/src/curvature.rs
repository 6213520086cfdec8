//! Ricci curvature on directed edges.
//!
//! Three routes are provided:
//! - `kappa_alpha`: 1 - W1(mu_x^alpha, mu_y^alpha) / d(x, y), the lazy-walk
//!   curvature at a fixed idleness.
//! - `kappa_lly`: the Lin-Lu-Yau limit, computed without a limit as the
//!   minimum of the gradient of the Laplacian over 1-Lipschitz potentials
//!   that are tight on (x, y).
//! - `kappa_star`: the same quantity from the signed-coupling side.
//!
//! The first two agree in the limit alpha -> 1 and the last two agree
//! exactly; tests cross-check all three.

use rayon::prelude::*;
use thiserror::Error;

use crate::digraph::{DiGraph, DistanceOracle, EdgeIndex, VertexIndex};
use crate::linprog::{self, Bounds, LpError, LpProblem, LpStatus, Relation, Sense};
use crate::measures::{MeasureError, ProbabilityMeasure, TransitionKernel};
use crate::transport::{self, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("curvature LP finished with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("curvature needs two distinct vertices, got {0} twice")]
    SameVertex(VertexIndex),
    #[error("sigma {sigma} does not match total edge weight {total}")]
    SigmaMismatch { sigma: f64, total: f64 },
}

/// Absolute-or-relative tolerance for sigma against the total weight.
pub const SIGMA_TOL: f64 = 1e-9;

fn distinct(x: VertexIndex, y: VertexIndex) -> Result<(), CurvatureError> {
    if x == y {
        Err(CurvatureError::SameVertex(x))
    } else {
        Ok(())
    }
}

fn optimal(problem: &LpProblem) -> Result<linprog::LpSolution, CurvatureError> {
    let sol = linprog::solve(problem)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        status => Err(CurvatureError::NotOptimal(status)),
    }
}

/// kappa_alpha(x, y) = 1 - W1(mu_x^alpha, mu_y^alpha) / d(x, y)
pub fn kappa_alpha(
    g: &DiGraph,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
    alpha: f64,
) -> Result<f64, CurvatureError> {
    distinct(x, y)?;
    let kernel = TransitionKernel::balanced(g);
    kappa_alpha_with(&kernel, oracle, x, y, alpha)
}

pub(crate) fn kappa_alpha_with(
    kernel: &TransitionKernel,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
    alpha: f64,
) -> Result<f64, CurvatureError> {
    let mu = kernel.mu_alpha(x, alpha)?;
    let nu = kernel.mu_alpha(y, alpha)?;
    let w = transport::w1(&mu, &nu, oracle)?;
    Ok(1.0 - w / oracle.get(x, y))
}

/// Vertices whose potential values enter the Laplacian gradient at (x, y).
fn local_support(kernel: &TransitionKernel, x: VertexIndex, y: VertexIndex) -> Vec<VertexIndex> {
    let mut s: Vec<_> = [x, y]
        .into_iter()
        .chain(kernel.row(x).support())
        .chain(kernel.row(y).support())
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Limit-free Lin-Lu-Yau curvature from x to y.
pub fn kappa_lly(
    g: &DiGraph,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
) -> Result<f64, CurvatureError> {
    distinct(x, y)?;
    let kernel = TransitionKernel::balanced(g);
    kappa_lly_with(&kernel, oracle, x, y)
}

pub(crate) fn kappa_lly_with(
    kernel: &TransitionKernel,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
) -> Result<f64, CurvatureError> {
    // A 1-Lipschitz potential on any vertex subset extends to the whole
    // graph, so the constraints only need the vertices the objective sees.
    kappa_lly_over(kernel, oracle, x, y, &local_support(kernel, x, y))
}

/// The Lipschitz LP restricted to `vertices` (which must contain x, y and
/// both kernel supports).
fn kappa_lly_over(
    kernel: &TransitionKernel,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
    vertices: &[VertexIndex],
) -> Result<f64, CurvatureError> {
    let dxy = oracle.get(x, y);
    let pos = |v: VertexIndex| vertices.binary_search(&v).expect("vertex in LP domain");
    // [L f(y) - L f(x)] / d(x,y) as a linear form in f
    let mut objective = vec![0.0; vertices.len()];
    objective[pos(y)] += 1.0 / dxy;
    objective[pos(x)] -= 1.0 / dxy;
    for (v, p) in kernel.row(y).iter() {
        objective[pos(v)] -= p / dxy;
    }
    for (v, p) in kernel.row(x).iter() {
        objective[pos(v)] += p / dxy;
    }
    let mut lp = LpProblem::new(Sense::Minimize, objective);
    for j in 0..vertices.len() {
        lp.set_bounds(j, Bounds::FREE);
    }
    lp.set_bounds(pos(x), Bounds::fixed(0.0));
    lp.set_bounds(pos(y), Bounds::fixed(dxy));
    for (a, &u) in vertices.iter().enumerate() {
        for (b, &v) in vertices.iter().enumerate() {
            if a != b {
                lp.constrain_sparse(&[(b, 1.0), (a, -1.0)], Relation::Le, oracle.get(u, v));
            }
        }
    }
    Ok(optimal(&lp)?.value)
}

/// Signed coupling certifying a lower bound on curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct StarCoupling {
    pub x: VertexIndex,
    pub y: VertexIndex,
    /// Nonzero entries B(u, v).
    pub entries: Vec<((VertexIndex, VertexIndex), f64)>,
}

impl StarCoupling {
    pub fn get(&self, u: VertexIndex, v: VertexIndex) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| *k == (u, v))
            .map(|(_, b)| *b)
            .unwrap_or(0.0)
    }

    /// Largest violation of the sign, total-mass, row and column conditions
    /// against `mu_x`/`mu_y` (the alpha = 0 measures).
    pub fn max_violation(
        &self,
        mu_x: &ProbabilityMeasure,
        mu_y: &ProbabilityMeasure,
        n: usize,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        let mut total = 0.0;
        for &((u, v), b) in &self.entries {
            if (u, v) == (self.x, self.y) {
                worst = worst.max(-b);
            } else {
                worst = worst.max(b);
            }
            rows[u] += b;
            cols[v] += b;
            total += b;
        }
        worst = worst.max(total.abs());
        for u in (0..n).filter(|&u| u != self.x) {
            worst = worst.max((rows[u] + mu_x.mass(u)).abs());
        }
        for v in (0..n).filter(|&v| v != self.y) {
            worst = worst.max((cols[v] + mu_y.mass(v)).abs());
        }
        worst
    }

    /// sum B(u, v) d(u, v)
    pub fn transport_value(&self, oracle: &DistanceOracle) -> f64 {
        self.entries
            .iter()
            .map(|&((u, v), b)| b * oracle.get(u, v))
            .sum()
    }
}

/// Curvature from the signed-coupling LP, together with an optimal coupling.
pub fn kappa_star(
    g: &DiGraph,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
) -> Result<(f64, StarCoupling), CurvatureError> {
    distinct(x, y)?;
    let kernel = TransitionKernel::balanced(g);
    kappa_star_with(&kernel, oracle, x, y)
}

pub(crate) fn kappa_star_with(
    kernel: &TransitionKernel,
    oracle: &DistanceOracle,
    x: VertexIndex,
    y: VertexIndex,
) -> Result<(f64, StarCoupling), CurvatureError> {
    let mu_x = kernel.row(x);
    let mu_y = kernel.row(y);
    // Rows outside {x} ∪ supp(mu_x) sum to zero with nonpositive entries, so
    // they vanish; likewise for columns outside {y} ∪ supp(mu_y).
    let mut rows: Vec<_> = std::iter::once(x).chain(mu_x.support()).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut cols: Vec<_> = std::iter::once(y).chain(mu_y.support()).collect();
    cols.sort_unstable();
    cols.dedup();
    let (nr, nc) = (rows.len(), cols.len());
    let var = |a: usize, b: usize| a * nc + b;

    let objective: Vec<f64> = rows
        .iter()
        .flat_map(|&u| cols.iter().map(move |&v| oracle.get(u, v)))
        .collect();
    let mut lp = LpProblem::new(Sense::Maximize, objective);
    for (a, &u) in rows.iter().enumerate() {
        for (b, &v) in cols.iter().enumerate() {
            let bounds = if (u, v) == (x, y) {
                Bounds::NONNEGATIVE
            } else {
                Bounds::NONPOSITIVE
            };
            lp.set_bounds(var(a, b), bounds);
        }
    }
    let all: Vec<_> = (0..nr * nc).map(|k| (k, 1.0)).collect();
    lp.constrain_sparse(&all, Relation::Eq, 0.0);
    for (a, &u) in rows.iter().enumerate() {
        if u != x {
            let terms: Vec<_> = (0..nc).map(|b| (var(a, b), 1.0)).collect();
            lp.constrain_sparse(&terms, Relation::Eq, -mu_x.mass(u));
        }
    }
    for (b, &v) in cols.iter().enumerate() {
        if v != y {
            let terms: Vec<_> = (0..nr).map(|a| (var(a, b), 1.0)).collect();
            lp.constrain_sparse(&terms, Relation::Eq, -mu_y.mass(v));
        }
    }
    let sol = optimal(&lp)?;
    let mut entries = Vec::new();
    for (a, &u) in rows.iter().enumerate() {
        for (b, &v) in cols.iter().enumerate() {
            let val = sol.assignment[var(a, b)];
            if val != 0.0 {
                entries.push(((u, v), val));
            }
        }
    }
    let coupling = StarCoupling { x, y, entries };
    Ok((sol.value / oracle.get(x, y), coupling))
}

/// Per-edge curvature and the sigma-weighted average.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// Indexed by edge.
    pub kappa: Vec<f64>,
    pub kappa_bar_sigma: f64,
    pub sigma: f64,
}

impl CurvatureField {
    /// max_e |kappa_e - kappa_bar_sigma|
    pub fn spread(&self) -> f64 {
        self.kappa
            .iter()
            .map(|k| (k - self.kappa_bar_sigma).abs())
            .fold(0.0, f64::max)
    }

    pub fn kappa(&self, e: EdgeIndex) -> f64 {
        self.kappa[e]
    }
}

/// 2 diam / d(x, y)
pub fn curvature_bound(oracle: &DistanceOracle, x: VertexIndex, y: VertexIndex) -> f64 {
    2.0 * oracle.diam() / oracle.get(x, y)
}

/// Limit-free curvature of every edge of `g`, in edge order.
pub fn edge_curvatures(g: &DiGraph, oracle: &DistanceOracle) -> Result<Vec<f64>, CurvatureError> {
    let kernel = TransitionKernel::balanced(g);
    g.edges()
        .par_iter()
        .map(|e| kappa_lly_with(&kernel, oracle, e.tail, e.head))
        .collect()
}

/// (1 / sigma) sum_e kappa_e w_e
pub fn weighted_average(kappa: &[f64], weights: &[f64], sigma: f64) -> f64 {
    kappa.iter().zip(weights).map(|(k, w)| k * w).sum::<f64>() / sigma
}

pub(crate) fn sigma_matches(sigma: f64, total: f64) -> bool {
    (sigma - total).abs() <= SIGMA_TOL * sigma.abs().max(1.0)
}

pub fn curvature_field(
    g: &DiGraph,
    oracle: &DistanceOracle,
    sigma: f64,
) -> Result<CurvatureField, CurvatureError> {
    let total = g.total_weight();
    if !sigma_matches(sigma, total) {
        return Err(CurvatureError::SigmaMismatch { sigma, total });
    }
    let kappa = edge_curvatures(g, oracle)?;
    let kappa_bar_sigma = weighted_average(&kappa, &g.weights(), sigma);
    Ok(CurvatureField {
        kappa,
        kappa_bar_sigma,
        sigma,
    })
}
