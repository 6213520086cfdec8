//! Simple, strongly connected weighted digraphs with decoupled edge weight
//! and edge length, plus the all-pairs directed distance they induce.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use thiserror::Error;

pub type VertexIndex = usize;
pub type EdgeIndex = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least {min} {what}, got {found}")]
    TooSmall {
        what: &'static str,
        min: usize,
        found: usize,
    },
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("edge references unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("self-loop at vertex {0:?}")]
    Loop(String),
    #[error("duplicate edge {0:?} -> {1:?}")]
    MultiEdge(String, String),
    #[error("edge {tail:?} -> {head:?} has non-positive or non-finite weight or length")]
    NonPositiveWeightOrLength { tail: String, head: String },
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("balancing factor {value} at vertex {vertex:?} is outside [0, 1]")]
    BetaOutOfRange { vertex: String, value: f64 },
    #[error("no balancing factor given for vertex {0:?}")]
    MissingBeta(String),
    #[error("expected {expected} edge weights, got {found}")]
    WeightCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub tail: String,
    pub head: String,
    pub weight: f64,
    pub length: f64,
}

impl EdgeSpec {
    pub fn new(tail: impl Into<String>, head: impl Into<String>, weight: f64, length: f64) -> Self {
        EdgeSpec {
            tail: tail.into(),
            head: head.into(),
            weight,
            length,
        }
    }
}

/// How the per-vertex balancing factor between out- and in-kernels is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPolicy {
    Constant(f64),
    /// Explicit value for every vertex.
    PerNode(HashMap<String, f64>),
    /// beta(x) = deg_out(x) / deg(x)
    DegreeRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: VertexIndex,
    pub head: VertexIndex,
    pub weight: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiGraph {
    ids: Vec<String>,
    index: HashMap<String, VertexIndex>,
    edges: Vec<Edge>,
    beta: Vec<f64>,
    out_edges: Vec<Vec<EdgeIndex>>,
    in_edges: Vec<Vec<EdgeIndex>>,
    edge_lookup: HashMap<(VertexIndex, VertexIndex), EdgeIndex>,
}

fn valid_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl DiGraph {
    /// Validates and builds a graph. Vertex indices follow `vertex_ids`
    /// order, edge indices follow `edges` order.
    pub fn build(
        vertex_ids: &[String],
        edges: &[EdgeSpec],
        beta_policy: &BetaPolicy,
    ) -> Result<Self, GraphError> {
        if vertex_ids.len() < 2 {
            return Err(GraphError::TooSmall {
                what: "vertices",
                min: 2,
                found: vertex_ids.len(),
            });
        }
        if edges.len() < 2 {
            return Err(GraphError::TooSmall {
                what: "edges",
                min: 2,
                found: edges.len(),
            });
        }
        let mut index = HashMap::with_capacity(vertex_ids.len());
        for (i, id) in vertex_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id.clone()));
            }
        }
        let n = vertex_ids.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        let mut built = Vec::with_capacity(edges.len());
        for spec in edges {
            let tail = *index
                .get(&spec.tail)
                .ok_or_else(|| GraphError::UnknownVertex(spec.tail.clone()))?;
            let head = *index
                .get(&spec.head)
                .ok_or_else(|| GraphError::UnknownVertex(spec.head.clone()))?;
            if tail == head {
                return Err(GraphError::Loop(spec.tail.clone()));
            }
            if !valid_positive(spec.weight) || !valid_positive(spec.length) {
                return Err(GraphError::NonPositiveWeightOrLength {
                    tail: spec.tail.clone(),
                    head: spec.head.clone(),
                });
            }
            let e = built.len();
            if edge_lookup.insert((tail, head), e).is_some() {
                return Err(GraphError::MultiEdge(spec.tail.clone(), spec.head.clone()));
            }
            out_edges[tail].push(e);
            in_edges[head].push(e);
            built.push(Edge {
                tail,
                head,
                weight: spec.weight,
                length: spec.length,
            });
        }

        let beta: Vec<f64> = match beta_policy {
            BetaPolicy::Constant(c) => vec![*c; n],
            BetaPolicy::PerNode(map) => vertex_ids
                .iter()
                .map(|id| {
                    map.get(id)
                        .copied()
                        .ok_or_else(|| GraphError::MissingBeta(id.clone()))
                })
                .collect::<Result<_, _>>()?,
            BetaPolicy::DegreeRatio => (0..n)
                .map(|v| {
                    let out = out_edges[v].len() as f64;
                    let total = out + in_edges[v].len() as f64;
                    if total == 0.0 {
                        0.5
                    } else {
                        out / total
                    }
                })
                .collect(),
        };
        for (id, &b) in vertex_ids.iter().zip(&beta) {
            if !(0.0..=1.0).contains(&b) {
                return Err(GraphError::BetaOutOfRange {
                    vertex: id.clone(),
                    value: b,
                });
            }
        }

        let g = DiGraph {
            ids: vertex_ids.to_vec(),
            index,
            edges: built,
            beta,
            out_edges,
            in_edges,
            edge_lookup,
        };
        if !g.is_strongly_connected() {
            return Err(GraphError::NotStronglyConnected);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex_id(&self, v: VertexIndex) -> &str {
        &self.ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Option<VertexIndex> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeIndex) -> &Edge {
        &self.edges[e]
    }

    pub fn find_edge(&self, tail: VertexIndex, head: VertexIndex) -> Option<EdgeIndex> {
        self.edge_lookup.get(&(tail, head)).copied()
    }

    pub fn out_edges(&self, v: VertexIndex) -> &[EdgeIndex] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: VertexIndex) -> &[EdgeIndex] {
        &self.in_edges[v]
    }

    pub fn beta(&self, v: VertexIndex) -> f64 {
        self.beta[v]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same topology, lengths and balancing factors with new edge weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<DiGraph, GraphError> {
        if weights.len() != self.edges.len() {
            return Err(GraphError::WeightCount {
                expected: self.edges.len(),
                found: weights.len(),
            });
        }
        let mut g = self.clone();
        for (e, &w) in g.edges.iter_mut().zip(weights) {
            if !valid_positive(w) {
                return Err(GraphError::NonPositiveWeightOrLength {
                    tail: self.ids[e.tail].clone(),
                    head: self.ids[e.head].clone(),
                });
            }
            e.weight = w;
        }
        Ok(g)
    }

    /// In- and out-neighbours of `v`, ascending, without duplicates.
    pub fn neighbors(&self, v: VertexIndex) -> Vec<VertexIndex> {
        let mut ns: Vec<VertexIndex> = self.out_edges[v]
            .iter()
            .map(|&e| self.edges[e].head)
            .chain(self.in_edges[v].iter().map(|&e| self.edges[e].tail))
            .collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    pub fn edge_specs(&self) -> Vec<EdgeSpec> {
        self.edges
            .iter()
            .map(|e| EdgeSpec::new(&self.ids[e.tail], &self.ids[e.head], e.weight, e.length))
            .collect()
    }

    fn reaches_all(&self, start: VertexIndex, forward: bool) -> bool {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            let adj = if forward {
                &self.out_edges[v]
            } else {
                &self.in_edges[v]
            };
            for &e in adj {
                let u = if forward {
                    self.edges[e].head
                } else {
                    self.edges[e].tail
                };
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == n
    }

    /// True iff every ordered pair of vertices is joined by a directed path.
    pub fn is_strongly_connected(&self) -> bool {
        self.num_vertices() <= 1 || (self.reaches_all(0, true) && self.reaches_all(0, false))
    }

    /// All-pairs directed shortest-path distances over edge lengths.
    pub fn shortest_distances(&self) -> DistanceOracle {
        let n = self.num_vertices();
        let mut dist = vec![f64::INFINITY; n * n];
        for s in 0..n {
            self.dijkstra(s, &mut dist[s * n..(s + 1) * n]);
        }
        DistanceOracle::from_flat(n, dist)
    }

    fn dijkstra(&self, source: VertexIndex, dist: &mut [f64]) {
        #[derive(PartialEq)]
        struct State {
            cost: f64,
            vertex: VertexIndex,
        }
        impl Eq for State {}
        impl Ord for State {
            fn cmp(&self, other: &Self) -> Ordering {
                other
                    .cost
                    .total_cmp(&self.cost)
                    .then_with(|| other.vertex.cmp(&self.vertex))
            }
        }
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        dist[source] = 0.0;
        let mut heap = BinaryHeap::from([State {
            cost: 0.0,
            vertex: source,
        }]);
        while let Some(State { cost, vertex }) = heap.pop() {
            if cost > dist[vertex] {
                continue;
            }
            for &e in &self.out_edges[vertex] {
                let edge = &self.edges[e];
                let next = cost + edge.length;
                if next < dist[edge.head] {
                    dist[edge.head] = next;
                    heap.push(State {
                        cost: next,
                        vertex: edge.head,
                    });
                }
            }
        }
    }
}

/// Directed distance d(x, y) for every ordered vertex pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceOracle {
    n: usize,
    dist: Vec<f64>,
    diam: f64,
}

impl DistanceOracle {
    fn from_flat(n: usize, dist: Vec<f64>) -> Self {
        let diam = dist.iter().copied().fold(0.0, f64::max);
        DistanceOracle { n, dist, diam }
    }

    /// Wraps an arbitrary square matrix without checking metric axioms.
    ///
    /// Intended for fixtures; `check_triangle_inequality` reports defects.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, x: VertexIndex, y: VertexIndex) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn row(&self, x: VertexIndex) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    /// Smallest distance across the tail/head pairs of `g`'s edges.
    pub fn min_edge_distance(&self, g: &DiGraph) -> f64 {
        g.edges()
            .iter()
            .map(|e| self.get(e.tail, e.head))
            .fold(f64::INFINITY, f64::min)
    }

    /// First triple (x, y, z) with d(x,z) > d(x,y) + d(y,z) beyond `tol`.
    pub fn check_triangle_inequality(
        &self,
        tol: f64,
    ) -> Result<(), (VertexIndex, VertexIndex, VertexIndex)> {
        for x in 0..self.n {
            for y in 0..self.n {
                for z in 0..self.n {
                    if self.get(x, z) > self.get(x, y) + self.get(y, z) + tol {
                        return Err((x, y, z));
                    }
                }
            }
        }
        Ok(())
    }
}
