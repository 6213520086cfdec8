//! Lin-Lu-Yau Ricci curvature and volume-preserving Ricci flow on weighted
//! directed graphs.
//!
//! Edges carry a weight (evolved by the flow) and a length (fixed). Lengths
//! induce an asymmetric shortest-path distance; weights induce random-walk
//! kernels that mix out- and in-neighbourhoods with a per-vertex balancing
//! factor `beta`. Curvature compares the two through optimal transport.

pub mod curvature;
pub mod digraph;
pub mod fixtures;
pub mod flow;
pub mod graph_file;
pub mod linprog;
pub mod measures;
pub mod transport;

pub use curvature::{
    curvature_bound, curvature_field, kappa_alpha, kappa_lly, kappa_star, CurvatureError,
    CurvatureField, StarCoupling,
};
pub use digraph::{BetaPolicy, DiGraph, DistanceOracle, Edge, EdgeSpec, GraphError};
pub use flow::{
    discrete_step, max_stable_step, ode_flow, run_flow, FlowConfig, FlowError, FlowStep, FlowTrace,
    Integrator, StepSize, Termination,
};
pub use graph_file::{BetaOverride, GraphFile, GraphFileError};
pub use measures::{ProbabilityMeasure, TransitionKernel};
pub use transport::{w1_dual, w1_primal, LipschitzPotential, TransportPlan};
