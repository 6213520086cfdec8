//! Invariant suite run by `dirricci check`.

use std::io::Write;

use dirricci_core::curvature::edge_curvatures;
use dirricci_core::measures::mu_alpha;
use dirricci_core::{
    curvature_bound, curvature_field, kappa_alpha, kappa_lly, kappa_star, run_flow, w1_dual,
    w1_primal, DiGraph, DistanceOracle, FlowConfig,
};

/// Ok holds a short summary, Err names the first counterexample.
pub type Outcome = Result<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Outcome,
}

const SCALE: f64 = 7.3;
const FLOW_STEPS: usize = 50;

fn pair(g: &DiGraph, x: usize, y: usize) -> String {
    format!("({}, {})", g.vertex_id(x), g.vertex_id(y))
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
}

fn triangle_inequality(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    d.check_triangle_inequality(1e-9).map_err(|(x, y, z)| {
        format!(
            "d({x}, {z}) > d({x}, {y}) + d({y}, {z}) for triple ({x}, {y}, {z})",
            x = g.vertex_id(x),
            y = g.vertex_id(y),
            z = g.vertex_id(z)
        )
    })?;
    Ok(format!("{} ordered triples", g.num_vertices().pow(3)))
}

fn duality(g: &DiGraph, d: &DistanceOracle, alpha: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for (x, y) in ordered_pairs(g.num_vertices()) {
        let at = |e: &dyn std::fmt::Display| format!("pair {}: {e}", pair(g, x, y));
        let mu = mu_alpha(g, x, alpha).map_err(|e| at(&e))?;
        let nu = mu_alpha(g, y, alpha).map_err(|e| at(&e))?;
        let primal = w1_primal(&mu, &nu, d).map_err(|e| at(&e))?.value;
        let dual = w1_dual(&mu, &nu, d).map_err(|e| at(&e))?.value;
        let gap = (primal - dual).abs();
        if gap > 1e-8 {
            return Err(at(&format!("primal {primal} vs dual {dual}")));
        }
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.1e}"))
}

fn concavity(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for e in g.edges() {
        let at = |e2: &dyn std::fmt::Display| format!("edge {}: {e2}", pair(g, e.tail, e.head));
        let k: Vec<f64> = grid
            .iter()
            .map(|&a| kappa_alpha(g, d, e.tail, e.head, a).map_err(|err| at(&err)))
            .collect::<Result<_, _>>()?;
        if k[4].abs() > 1e-12 {
            return Err(at(&format!("kappa_1 = {} is not zero", k[4])));
        }
        for i in 1..grid.len() - 1 {
            if k[i] < 0.5 * (k[i - 1] + k[i + 1]) - 1e-8 {
                return Err(at(&format!(
                    "kappa_alpha not concave at alpha = {}",
                    grid[i]
                )));
            }
        }
    }
    Ok("kappa_alpha concave on alpha in {0, 0.25, 0.5, 0.75, 1}".into())
}

fn bound(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    for e in g.edges() {
        let at = |e2: &dyn std::fmt::Display| format!("edge {}: {e2}", pair(g, e.tail, e.head));
        let b = curvature_bound(d, e.tail, e.head);
        let limit = kappa_lly(g, d, e.tail, e.head).map_err(|err| at(&err))?;
        if limit.abs() > b + 1e-8 {
            return Err(at(&format!("|kappa| = {} exceeds {b}", limit.abs())));
        }
        let mut prev = f64::NEG_INFINITY;
        for a in [0.5, 0.9, 0.99, 0.999] {
            let ratio = kappa_alpha(g, d, e.tail, e.head, a).map_err(|err| at(&err))? / (1.0 - a);
            if ratio > b + 1e-8 {
                return Err(at(&format!(
                    "kappa_alpha/(1-alpha) = {ratio} exceeds {b} at alpha = {a}"
                )));
            }
            if ratio < prev - 1e-9 || ratio > limit + 1e-9 || limit - ratio >= 10.0 * (1.0 - a) {
                return Err(at(&format!("kappa_alpha/(1-alpha) = {ratio} inconsistent with kappa = {limit} at alpha = {a}")));
            }
            prev = ratio;
        }
    }
    Ok("|kappa| and kappa_alpha/(1-alpha) within 2 diam/d".into())
}

fn equivalence(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    let kappa = edge_curvatures(g, d).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (id, e) in g.edges().iter().enumerate() {
        let (star, _) = kappa_star(g, d, e.tail, e.head)
            .map_err(|err| format!("edge {}: {err}", pair(g, e.tail, e.head)))?;
        let diff = (kappa[id] - star).abs();
        if diff > 1e-7 {
            return Err(format!(
                "edge {}: kappa {} vs kappa* {star}",
                pair(g, e.tail, e.head),
                kappa[id]
            ));
        }
        worst = worst.max(diff);
    }
    Ok(format!("max |kappa - kappa*| {worst:.1e}"))
}

fn scale_invariance(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    let scaled = g
        .with_weights(&g.weights().iter().map(|w| w * SCALE).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    let a = curvature_field(g, d, g.total_weight()).map_err(|e| e.to_string())?;
    let b = curvature_field(&scaled, d, scaled.total_weight()).map_err(|e| e.to_string())?;
    for (id, e) in g.edges().iter().enumerate() {
        if (a.kappa[id] - b.kappa[id]).abs() > 1e-10 {
            return Err(format!(
                "edge {}: kappa {} becomes {} after scaling by {SCALE}",
                pair(g, e.tail, e.head),
                a.kappa[id],
                b.kappa[id]
            ));
        }
    }
    if (a.kappa_bar_sigma - b.kappa_bar_sigma).abs() > 1e-10 {
        return Err(format!("kappa_bar_sigma changes after scaling by {SCALE}"));
    }
    Ok(format!("weights scaled by {SCALE}"))
}

fn conservation(g: &DiGraph, d: &DistanceOracle) -> Outcome {
    let config = FlowConfig {
        max_steps: FLOW_STEPS,
        ..FlowConfig::default()
    };
    let trace = run_flow(g, d, &config).map_err(|e| e.to_string())?;
    for step in &trace.steps {
        let drift = (step.weights.iter().sum::<f64>() - trace.sigma).abs();
        if drift > 1e-9 || step.volume_drift > 1e-9 {
            return Err(format!("volume drift {drift:e} at step {}", step.index));
        }
        if let Some(e) = step.weights.iter().position(|&w| w <= 0.0) {
            return Err(format!(
                "edge {e} weight not positive at step {}",
                step.index
            ));
        }
    }
    Ok(format!(
        "{} steps, max drift {:.1e}",
        trace.last().index,
        trace.volume_drift_max()
    ))
}

/// Runs every check against `g` with the supplied distances.
pub fn run_checks(g: &DiGraph, d: &DistanceOracle, alpha: f64) -> Vec<CheckResult> {
    vec![
        CheckResult {
            name: "triangle_inequality",
            outcome: triangle_inequality(g, d),
        },
        CheckResult {
            name: "duality",
            outcome: duality(g, d, alpha),
        },
        CheckResult {
            name: "concavity",
            outcome: concavity(g, d),
        },
        CheckResult {
            name: "bound",
            outcome: bound(g, d),
        },
        CheckResult {
            name: "equivalence",
            outcome: equivalence(g, d),
        },
        CheckResult {
            name: "scale_invariance",
            outcome: scale_invariance(g, d),
        },
        CheckResult {
            name: "conservation",
            outcome: conservation(g, d),
        },
    ]
}

pub fn print_table(results: &[CheckResult], out: &mut impl Write) -> std::io::Result<()> {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        let (status, detail) = match &r.outcome {
            Ok(s) => ("PASS", s),
            Err(s) => ("FAIL", s),
        };
        writeln!(out, "{:<width$}  {status}  {detail}", r.name)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirricci_core::fixtures::{cycle, nonsymmetric_triangle};
    use dirricci_core::BetaPolicy;

    #[test]
    fn reference_graphs_pass() {
        for g in [
            nonsymmetric_triangle(BetaPolicy::Constant(0.5)),
            nonsymmetric_triangle(BetaPolicy::DegreeRatio),
            cycle(2, BetaPolicy::Constant(0.5)),
        ] {
            let d = g.shortest_distances();
            for r in run_checks(&g, &d, 0.5) {
                assert!(r.outcome.is_ok(), "{}: {:?}", r.name, r.outcome);
            }
        }
    }

    #[test]
    fn corrupted_oracle_names_the_triple() {
        let g = nonsymmetric_triangle(BetaPolicy::Constant(0.5));
        let d = DistanceOracle::from_matrix(vec![
            vec![0.0, 1.0, 1.0],
            vec![5.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let results = run_checks(&g, &d, 0.5);
        let first = results
            .iter()
            .find_map(|r| r.outcome.as_ref().err())
            .unwrap();
        assert_eq!(
            first,
            "d(v2, v1) > d(v2, v3) + d(v3, v1) for triple (v2, v3, v1)"
        );
    }
}
