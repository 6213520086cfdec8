//! JSON and CSV artifacts written by the `curvature` and `flow` commands.

use std::io::Write;

use dirricci_core::{
    curvature_bound, curvature_field, kappa_alpha, kappa_star, CurvatureError, DiGraph,
    DistanceOracle, FlowTrace,
};
use serde::Serialize;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn sig12_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sig12).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeReport {
    pub edge_id: usize,
    pub tail: String,
    pub head: String,
    pub d: f64,
    pub kappa: f64,
    pub kappa_star: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_alpha_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub edges: Vec<EdgeReport>,
    pub kappa_bar_sigma: f64,
    pub sigma: f64,
    pub diam: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

pub fn curvature_report(
    g: &DiGraph,
    oracle: &DistanceOracle,
    alpha: Option<f64>,
) -> Result<CurvatureReport, CurvatureError> {
    let sigma = g.total_weight();
    let field = curvature_field(g, oracle, sigma)?;
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let (star, _) = kappa_star(g, oracle, e.tail, e.head)?;
            let ratio = alpha
                .map(|a| kappa_alpha(g, oracle, e.tail, e.head, a).map(|k| sig12(k / (1.0 - a))))
                .transpose()?;
            Ok(EdgeReport {
                edge_id: id,
                tail: g.vertex_id(e.tail).to_string(),
                head: g.vertex_id(e.head).to_string(),
                d: sig12(oracle.get(e.tail, e.head)),
                kappa: sig12(field.kappa[id]),
                kappa_star: sig12(star),
                bound: sig12(curvature_bound(oracle, e.tail, e.head)),
                kappa_alpha_ratio: ratio,
            })
        })
        .collect::<Result<_, CurvatureError>>()?;
    Ok(CurvatureReport {
        edges,
        kappa_bar_sigma: sig12(field.kappa_bar_sigma),
        sigma: sig12(sigma),
        diam: sig12(oracle.diam()),
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub terminated_by: &'static str,
    pub steps: usize,
    pub dt: f64,
    pub sigma: f64,
    pub final_weights: Vec<f64>,
    pub final_kappa: Vec<f64>,
    pub volume_drift_max: f64,
}

pub fn flow_summary(trace: &FlowTrace) -> FlowSummary {
    let last = trace.last();
    FlowSummary {
        terminated_by: trace.terminated_by.as_str(),
        steps: last.index,
        dt: sig12(trace.dt),
        sigma: sig12(trace.sigma),
        final_weights: sig12_all(&last.weights),
        final_kappa: sig12_all(&last.field.kappa),
        volume_drift_max: sig12(trace.volume_drift_max()),
    }
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TraceRow<'a> {
    t: f64,
    edge_id: usize,
    tail: &'a str,
    head: &'a str,
    weight: f64,
    kappa: f64,
    kappa_bar: f64,
}

/// Writes every `every`-th recorded state, always including the last, one
/// row per edge.
pub fn write_trace(
    g: &DiGraph,
    trace: &FlowTrace,
    every: usize,
    out: impl Write,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let last = trace.last().index;
    for step in trace
        .steps
        .iter()
        .filter(|s| s.index % every == 0 || s.index == last)
    {
        for (id, e) in g.edges().iter().enumerate() {
            w.serialize(TraceRow {
                t: sig12(step.time),
                edge_id: id,
                tail: g.vertex_id(e.tail),
                head: g.vertex_id(e.head),
                weight: sig12(step.weights[id]),
                kappa: sig12(step.field.kappa[id]),
                kappa_bar: sig12(step.field.kappa_bar_sigma),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
