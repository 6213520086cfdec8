//! JSON graph description and balancing-factor resolution.
//!
//! ```json
//! {
//!   "nodes": [{"id": "v1", "beta": 0.2}, {"id": "v2"}],
//!   "edges": [{"tail": "v1", "head": "v2", "weight": 1.0, "length": 1.0}],
//!   "beta_policy": "constant",
//!   "beta_const": 0.5
//! }
//! ```
//!
//! Balancing factors resolve per vertex in this order: explicit override,
//! the node's own `beta`, degree ratio (requested by override or by
//! `beta_policy`), `beta_const` under the constant policy, then 0.5.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{BetaPolicy, DiGraph, EdgeSpec, GraphError};

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("cannot read graph file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilePolicy {
    Constant,
    DegreeRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub tail: String,
    pub head: String,
    pub weight: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_policy: Option<FilePolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_const: Option<f64>,
}

/// Command-line level balancing-factor choices.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BetaOverride {
    pub constant: Option<f64>,
    pub degree_ratio: bool,
}

impl GraphFile {
    pub fn from_json(text: &str) -> Result<Self, GraphFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GraphFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph file serializes")
    }

    /// Describes `g` with every balancing factor written per node.
    pub fn from_graph(g: &DiGraph) -> Self {
        GraphFile {
            nodes: g
                .vertex_ids()
                .iter()
                .zip(g.betas())
                .map(|(id, &b)| NodeEntry {
                    id: id.clone(),
                    beta: Some(b),
                })
                .collect(),
            edges: g
                .edge_specs()
                .into_iter()
                .map(|e| EdgeEntry {
                    tail: e.tail,
                    head: e.head,
                    weight: e.weight,
                    length: e.length,
                })
                .collect(),
            beta_policy: None,
            beta_const: None,
        }
    }

    fn degree_ratios(&self) -> HashMap<&str, f64> {
        let mut out: HashMap<&str, (f64, f64)> = HashMap::new();
        for e in &self.edges {
            out.entry(e.tail.as_str()).or_default().0 += 1.0;
            out.entry(e.head.as_str()).or_default().1 += 1.0;
        }
        out.into_iter()
            .map(|(v, (o, i))| {
                (
                    v,
                    if o + i > 0.0 {
                        o / (o + i)
                    } else {
                        DEFAULT_BETA
                    },
                )
            })
            .collect()
    }

    /// Per-vertex balancing factors after applying the precedence rules.
    pub fn resolve_betas(&self, overrides: BetaOverride) -> HashMap<String, f64> {
        let ratios = self.degree_ratios();
        let use_ratio = overrides.degree_ratio || self.beta_policy == Some(FilePolicy::DegreeRatio);
        let fallback_const = match self.beta_policy {
            Some(FilePolicy::Constant) | None => self.beta_const.unwrap_or(DEFAULT_BETA),
            Some(FilePolicy::DegreeRatio) => DEFAULT_BETA,
        };
        self.nodes
            .iter()
            .map(|node| {
                let beta = if let Some(c) = overrides.constant {
                    c
                } else if let Some(b) = node.beta {
                    b
                } else if use_ratio {
                    ratios
                        .get(node.id.as_str())
                        .copied()
                        .unwrap_or(DEFAULT_BETA)
                } else {
                    fallback_const
                };
                (node.id.clone(), beta)
            })
            .collect()
    }

    pub fn to_graph(&self, overrides: BetaOverride) -> Result<DiGraph, GraphError> {
        let ids: Vec<String> = self.nodes.iter().map(|n| n.id.clone()).collect();
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .map(|e| EdgeSpec::new(&e.tail, &e.head, e.weight, e.length))
            .collect();
        DiGraph::build(
            &ids,
            &edges,
            &BetaPolicy::PerNode(self.resolve_betas(overrides)),
        )
    }
}
