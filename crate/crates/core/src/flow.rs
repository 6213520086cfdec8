//! Volume-preserving Ricci flow on edge weights with fixed distances.
//!
//! Weights evolve by `dw_e/dt = w_e (kappa_bar_sigma - kappa_e)` where
//! `kappa_bar_sigma = (1/sigma) sum_h kappa_h w_h`, which keeps the total
//! weight at `sigma`. The discrete flow is the explicit Euler step of this
//! equation; the ODE route integrates it with fixed-step classical RK4.
//! Distances never change, so the stability constant K is computed once.

use thiserror::Error;

use crate::curvature::{self, CurvatureError, CurvatureField};
use crate::digraph::{DiGraph, DistanceOracle, GraphError};

/// Allowed |sum w - sigma| on the discrete flow.
pub const VOLUME_TOL: f64 = 1e-9;
/// Allowed per-step drift of the RK4 flow before renormalization.
pub const ODE_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {edge} weight {weight} is not positive after step {step}")]
    NonPositiveWeight {
        edge: usize,
        weight: f64,
        step: usize,
    },
    #[error("volume drifted by {drift:e} at step {step}")]
    VolumeNotConserved { step: usize, drift: f64 },
    #[error("step size {step} exceeds the stability bound {bound}")]
    StepTooLarge { step: f64, bound: f64 },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// Half of the stability bound 1/(2K).
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Discrete,
    Ode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub step_size: StepSize,
    pub max_steps: usize,
    /// Stop once max_e |kappa_e - kappa_bar_sigma| falls below this.
    pub stop_tolerance: f64,
    /// Total volume; defaults to the initial total weight. When given, the
    /// initial weights are rescaled to sum to it.
    pub sigma: Option<f64>,
    pub integrator: Integrator,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step_size: StepSize::Auto,
            max_steps: 200,
            stop_tolerance: 1e-6,
            sigma: None,
            integrator: Integrator::Discrete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxSteps,
    Tolerance,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxSteps => "max_steps",
            Termination::Tolerance => "tolerance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowStep {
    pub index: usize,
    /// Flow time: index times the step length.
    pub time: f64,
    pub weights: Vec<f64>,
    pub field: CurvatureField,
    /// |sum w - sigma| before any renormalization.
    pub volume_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub steps: Vec<FlowStep>,
    pub terminated_by: Termination,
    /// Time increment between recorded steps.
    pub dt: f64,
    pub sigma: f64,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowStep {
        self.steps.last().expect("trace holds the initial state")
    }

    pub fn volume_drift_max(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.volume_drift)
            .fold(0.0, f64::max)
    }

    /// Weight history of one edge.
    pub fn edge_series(&self, e: usize) -> Vec<f64> {
        self.steps.iter().map(|s| s.weights[e]).collect()
    }
}

/// K = 2 diam / min over edges of d(tail, head).
pub fn curvature_constant(g: &DiGraph, oracle: &DistanceOracle) -> f64 {
    2.0 * oracle.diam() / oracle.min_edge_distance(g)
}

/// 1/(2K): the largest step that keeps every weight nonnegative.
pub fn max_stable_step(g: &DiGraph, oracle: &DistanceOracle) -> f64 {
    1.0 / (2.0 * curvature_constant(g, oracle))
}

pub fn resolve_step(
    step: StepSize,
    g: &DiGraph,
    oracle: &DistanceOracle,
) -> Result<f64, FlowError> {
    let bound = max_stable_step(g, oracle);
    match step {
        StepSize::Auto => Ok(0.5 * bound),
        StepSize::Fixed(s) if !(s.is_finite() && s > 0.0) => Err(FlowError::InvalidConfig(
            format!("step size {s} must be positive"),
        )),
        StepSize::Fixed(s) if s > bound => Err(FlowError::StepTooLarge { step: s, bound }),
        StepSize::Fixed(s) => Ok(s),
    }
}

/// One explicit step: w_e - s w_e (kappa_e - kappa_bar_sigma), all edges
/// updated from the same field.
pub fn discrete_step(
    weights: &[f64],
    field: &CurvatureField,
    s: f64,
) -> Result<Vec<f64>, FlowError> {
    weights
        .iter()
        .zip(&field.kappa)
        .enumerate()
        .map(|(edge, (&w, &k))| {
            let next = w - s * w * (k - field.kappa_bar_sigma);
            if next > 0.0 {
                Ok(next)
            } else {
                Err(FlowError::NonPositiveWeight {
                    edge,
                    weight: next,
                    step: 0,
                })
            }
        })
        .collect()
}

/// Initial snapshot whose weights sum to the configured sigma.
fn initial_state(g: &DiGraph, sigma: Option<f64>) -> Result<(DiGraph, f64), FlowError> {
    let total = g.total_weight();
    match sigma {
        None => Ok((g.clone(), total)),
        Some(s) if !(s.is_finite() && s > 0.0) => Err(FlowError::InvalidConfig(format!(
            "sigma {s} must be positive"
        ))),
        Some(s) => {
            let scaled: Vec<f64> = g.weights().iter().map(|w| w * s / total).collect();
            Ok((g.with_weights(&scaled)?, s))
        }
    }
}

fn validate(config: &FlowConfig) -> Result<(), FlowError> {
    if !(config.stop_tolerance >= 0.0) {
        return Err(FlowError::InvalidConfig(
            "stop tolerance must be nonnegative".into(),
        ));
    }
    Ok(())
}

fn check_positive(weights: &[f64], step: usize) -> Result<(), FlowError> {
    match weights.iter().position(|&w| !(w > 0.0)) {
        Some(edge) => Err(FlowError::NonPositiveWeight {
            edge,
            weight: weights[edge],
            step,
        }),
        None => Ok(()),
    }
}

/// Runs the flow with the configured integrator.
pub fn run_flow(
    g: &DiGraph,
    oracle: &DistanceOracle,
    config: &FlowConfig,
) -> Result<FlowTrace, FlowError> {
    match config.integrator {
        Integrator::Discrete => discrete_flow(g, oracle, config),
        Integrator::Ode => ode_flow(g, oracle, config),
    }
}

/// Iterates curvature -> discrete step until `max_steps` or the stop
/// tolerance, recording every state including the initial one. Each new
/// state is rescaled to sigma; `volume_drift` holds the pre-rescale error.
pub fn discrete_flow(
    g: &DiGraph,
    oracle: &DistanceOracle,
    config: &FlowConfig,
) -> Result<FlowTrace, FlowError> {
    validate(config)?;
    let s = resolve_step(config.step_size, g, oracle)?;
    let (mut current, sigma) = initial_state(g, config.sigma)?;
    let mut steps = Vec::with_capacity(config.max_steps + 1);
    let mut index = 0;
    let mut drift = 0.0;
    loop {
        let weights = current.weights();
        check_positive(&weights, index)?;
        let field = curvature::curvature_field(&current, oracle, sigma)?;
        let converged = field.spread() < config.stop_tolerance;
        let next = if converged || index == config.max_steps {
            None
        } else {
            Some(discrete_step(&weights, &field, s).map_err(|e| match e {
                FlowError::NonPositiveWeight { edge, weight, .. } => FlowError::NonPositiveWeight {
                    edge,
                    weight,
                    step: index + 1,
                },
                other => other,
            })?)
        };
        steps.push(FlowStep {
            index,
            time: index as f64 * s,
            weights,
            field,
            volume_drift: drift,
        });
        match next {
            None => {
                let terminated_by = if converged {
                    Termination::Tolerance
                } else {
                    Termination::MaxSteps
                };
                return Ok(FlowTrace {
                    steps,
                    terminated_by,
                    dt: s,
                    sigma,
                });
            }
            Some(w) => {
                // The update conserves volume exactly only when sum w = sigma,
                // and any deviation is amplified by (1 + s kappa_bar) per
                // step, so rounding error is projected out each step.
                let total: f64 = w.iter().sum();
                drift = (total - sigma).abs();
                if drift > VOLUME_TOL * sigma.max(1.0) {
                    return Err(FlowError::VolumeNotConserved {
                        step: index + 1,
                        drift,
                    });
                }
                let w: Vec<f64> = w.iter().map(|v| v * sigma / total).collect();
                current = current.with_weights(&w)?;
                index += 1;
            }
        }
    }
}

/// Right-hand side of the normalized flow: w_e (kappa_bar_sigma - kappa_e).
fn normalized_rhs(
    g: &DiGraph,
    oracle: &DistanceOracle,
    w: &[f64],
    sigma: f64,
) -> Result<Vec<f64>, FlowError> {
    let kappa = curvature::edge_curvatures(&g.with_weights(w)?, oracle)?;
    let bar = curvature::weighted_average(&kappa, w, sigma);
    Ok(w.iter().zip(&kappa).map(|(w, k)| w * (bar - k)).collect())
}

/// Right-hand side of the unnormalized flow: -kappa_e w_e.
fn unnormalized_rhs(
    g: &DiGraph,
    oracle: &DistanceOracle,
    w: &[f64],
) -> Result<Vec<f64>, FlowError> {
    let kappa = curvature::edge_curvatures(&g.with_weights(w)?, oracle)?;
    Ok(w.iter().zip(&kappa).map(|(w, k)| -k * w).collect())
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// One classical fourth-order Runge-Kutta step.
fn rk4_step<F>(w: &[f64], h: f64, mut rhs: F) -> Result<Vec<f64>, FlowError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, FlowError>,
{
    let k1 = rhs(w)?;
    let k2 = rhs(&axpy(w, 0.5 * h, &k1))?;
    let k3 = rhs(&axpy(w, 0.5 * h, &k2))?;
    let k4 = rhs(&axpy(w, h, &k3))?;
    Ok(w.iter()
        .enumerate()
        .map(|(i, wi)| wi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates the normalized flow with RK4 at `h = s/4` over the same
/// horizon as `max_steps` discrete steps, renormalizing to sigma after each
/// step.
pub fn ode_flow(
    g: &DiGraph,
    oracle: &DistanceOracle,
    config: &FlowConfig,
) -> Result<FlowTrace, FlowError> {
    validate(config)?;
    let s = resolve_step(config.step_size, g, oracle)?;
    let h = s / 4.0;
    let (start, sigma) = initial_state(g, config.sigma)?;
    let total_steps = 4 * config.max_steps;
    let mut w = start.weights();
    let mut drift = 0.0;
    let mut steps = Vec::with_capacity(total_steps + 1);
    let mut index = 0;
    loop {
        check_positive(&w, index)?;
        let snapshot = start.with_weights(&w)?;
        let field = curvature::curvature_field(&snapshot, oracle, sigma)?;
        let converged = field.spread() < config.stop_tolerance;
        steps.push(FlowStep {
            index,
            time: index as f64 * h,
            weights: w.clone(),
            field,
            volume_drift: drift,
        });
        if converged || index == total_steps {
            let terminated_by = if converged {
                Termination::Tolerance
            } else {
                Termination::MaxSteps
            };
            return Ok(FlowTrace {
                steps,
                terminated_by,
                dt: h,
                sigma,
            });
        }
        let next = rk4_step(&w, h, |x| normalized_rhs(&start, oracle, x, sigma))?;
        let total: f64 = next.iter().sum();
        drift = (total - sigma).abs();
        if drift > ODE_DRIFT_TOL * sigma.max(1.0) {
            return Err(FlowError::VolumeNotConserved {
                step: index + 1,
                drift,
            });
        }
        w = next.iter().map(|v| v * sigma / total).collect();
        index += 1;
    }
}

/// Integrates the normalized and unnormalized flows side by side with RK4
/// and returns the largest gap between `sigma * w~ / sum w~` and `w`.
pub fn unnormalized_relation_deviation(
    g: &DiGraph,
    oracle: &DistanceOracle,
    horizon: f64,
    h: f64,
) -> Result<f64, FlowError> {
    if !(h > 0.0 && horizon >= 0.0) {
        return Err(FlowError::InvalidConfig(
            "need h > 0 and horizon >= 0".into(),
        ));
    }
    let sigma = g.total_weight();
    let steps = (horizon / h).round() as usize;
    let mut w = g.weights();
    let mut w_tilde = g.weights();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        w = rk4_step(&w, h, |x| normalized_rhs(g, oracle, x, sigma))?;
        w_tilde = rk4_step(&w_tilde, h, |x| unnormalized_rhs(g, oracle, x))?;
        let total: f64 = w_tilde.iter().sum();
        for (a, b) in w.iter().zip(&w_tilde) {
            worst = worst.max((a - sigma * b / total).abs());
        }
    }
    Ok(worst)
}

/// True iff the normalized flow matches the rescaled unnormalized flow
/// within 1e-5 over `horizon`.
pub fn unnormalized_relation_check(
    g: &DiGraph,
    oracle: &DistanceOracle,
    horizon: f64,
) -> Result<bool, FlowError> {
    let h = max_stable_step(g, oracle) / 8.0;
    Ok(unnormalized_relation_deviation(g, oracle, horizon, h)? <= 1e-5)
}

/// Weights after `horizon / s` discrete steps of size `s` (no early stop).
fn discrete_weights_at(
    g: &DiGraph,
    oracle: &DistanceOracle,
    s: f64,
    horizon: f64,
) -> Result<Vec<f64>, FlowError> {
    let config = FlowConfig {
        step_size: StepSize::Fixed(s),
        max_steps: (horizon / s).round() as usize,
        stop_tolerance: 0.0,
        ..FlowConfig::default()
    };
    Ok(discrete_flow(g, oracle, &config)?.last().weights.clone())
}

/// Observed convergence order of the discrete flow toward the ODE solution
/// at `horizon`, from runs with step `s` and `s/2`. The reference solution
/// uses RK4 with step `s/16`.
pub fn discrete_convergence_order(
    g: &DiGraph,
    oracle: &DistanceOracle,
    s: f64,
    horizon: f64,
) -> Result<f64, FlowError> {
    let reference = {
        let config = FlowConfig {
            step_size: StepSize::Fixed(s / 4.0),
            max_steps: (horizon / (s / 4.0)).round() as usize,
            stop_tolerance: 0.0,
            integrator: Integrator::Ode,
            ..FlowConfig::default()
        };
        ode_flow(g, oracle, &config)?.last().weights.clone()
    };
    let gap = |w: &[f64]| {
        w.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let coarse = gap(&discrete_weights_at(g, oracle, s, horizon)?);
    let fine = gap(&discrete_weights_at(g, oracle, s / 2.0, horizon)?);
    Ok((coarse / fine).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{BetaPolicy, EdgeSpec};

    fn build(n: usize, edges: &[(usize, usize)], policy: BetaPolicy) -> DiGraph {
        let ids: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
        let specs: Vec<_> = edges
            .iter()
            .map(|&(t, h)| EdgeSpec::new(&ids[t], &ids[h], 1.0, 1.0))
            .collect();
        DiGraph::build(&ids, &specs, &policy).unwrap()
    }

    fn triangle(beta: f64) -> DiGraph {
        build(
            3,
            &[(0, 1), (1, 2), (2, 0), (0, 2)],
            BetaPolicy::Constant(beta),
        )
    }

    #[test]
    fn stability_bounds() {
        let two = build(2, &[(0, 1), (1, 0)], BetaPolicy::Constant(0.5));
        let d = two.shortest_distances();
        assert_eq!(curvature_constant(&two, &d), 2.0);
        assert_eq!(max_stable_step(&two, &d), 0.25);
        assert_eq!(resolve_step(StepSize::Auto, &two, &d).unwrap(), 0.125);

        let tri = triangle(0.5);
        let d = tri.shortest_distances();
        assert_eq!(max_stable_step(&tri, &d), 0.125);
        assert!(matches!(
            resolve_step(StepSize::Fixed(0.2), &tri, &d),
            Err(FlowError::StepTooLarge { .. })
        ));

        let complete = build(
            3,
            &[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)],
            BetaPolicy::Constant(0.5),
        );
        let d = complete.shortest_distances();
        assert_eq!(max_stable_step(&complete, &d), 0.25);
    }

    #[test]
    fn one_step_on_triangle() {
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let field = curvature::curvature_field(&g, &d, 4.0).unwrap();
        let w = discrete_step(&g.weights(), &field, 0.1).unwrap();
        assert!((w[0] - 1.0375).abs() < 1e-12);
        assert!((w[1] - 1.0375).abs() < 1e-12);
        assert!((w[2] - 0.9625).abs() < 1e-12);
        assert!((w[3] - 0.9625).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cycles_are_fixed_points() {
        for g in [
            build(2, &[(0, 1), (1, 0)], BetaPolicy::Constant(0.5)),
            build(3, &[(0, 1), (1, 2), (2, 0)], BetaPolicy::Constant(0.3)),
        ] {
            let d = g.shortest_distances();
            let field = curvature::curvature_field(&g, &d, g.total_weight()).unwrap();
            assert_eq!(
                discrete_step(&g.weights(), &field, 0.1).unwrap(),
                g.weights()
            );
            let trace = run_flow(&g, &d, &FlowConfig::default()).unwrap();
            assert_eq!(trace.terminated_by, Termination::Tolerance);
            assert_eq!(trace.steps.len(), 1);
        }
    }

    #[test]
    fn step_reports_negative_weights() {
        let field = CurvatureField {
            kappa: vec![3.0, -1.0],
            kappa_bar_sigma: 1.0,
            sigma: 2.0,
        };
        assert!(matches!(
            discrete_step(&[1.0, 1.0], &field, 1.0),
            Err(FlowError::NonPositiveWeight { edge: 0, .. })
        ));
    }

    #[test]
    fn sigma_override_rescales() {
        let g = triangle(0.2);
        let d = g.shortest_distances();
        let config = FlowConfig {
            sigma: Some(1.0),
            max_steps: 5,
            ..FlowConfig::default()
        };
        let trace = run_flow(&g, &d, &config).unwrap();
        assert_eq!(trace.sigma, 1.0);
        for step in &trace.steps {
            assert!((step.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let bad = FlowConfig {
            sigma: Some(-1.0),
            ..FlowConfig::default()
        };
        assert!(matches!(
            run_flow(&g, &d, &bad),
            Err(FlowError::InvalidConfig(_))
        ));
    }

    #[test]
    fn ode_flow_conserves_volume() {
        let g = triangle(0.2);
        let d = g.shortest_distances();
        let config = FlowConfig {
            max_steps: 10,
            integrator: Integrator::Ode,
            ..FlowConfig::default()
        };
        let trace = run_flow(&g, &d, &config).unwrap();
        assert_eq!(trace.steps.len(), 41);
        assert!(trace.volume_drift_max() <= ODE_DRIFT_TOL);
        assert!((trace.dt - 0.125 / 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn flow_is_deterministic() {
        let g = triangle(0.8);
        let d = g.shortest_distances();
        let config = FlowConfig {
            max_steps: 30,
            ..FlowConfig::default()
        };
        assert_eq!(
            run_flow(&g, &d, &config).unwrap(),
            run_flow(&g, &d, &config).unwrap()
        );
    }

    #[test]
    fn frozen_curvature_solution_is_second_order_accurate() {
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let field = curvature::curvature_field(&g, &d, 4.0).unwrap();
        let config = FlowConfig {
            step_size: StepSize::Fixed(0.05),
            max_steps: 4,
            stop_tolerance: 0.0,
            integrator: Integrator::Ode,
            ..FlowConfig::default()
        };
        let trace = run_flow(&g, &d, &config).unwrap();
        let gap = |step: &FlowStep| {
            (0..4)
                .map(|e| {
                    let frozen = (-step.time * (field.kappa[e] - field.kappa_bar_sigma)).exp();
                    (step.weights[e] - frozen).abs()
                })
                .fold(0.0, f64::max)
        };
        let (early, late) = (gap(&trace.steps[4]), gap(&trace.steps[8]));
        assert!(early < 1e-3);
        assert!((late / early - 4.0).abs() < 0.5, "{early} {late}");
    }

    #[test]
    fn discrete_flow_is_first_order() {
        let g = triangle(0.5);
        let d = g.shortest_distances();
        let order = discrete_convergence_order(&g, &d, 0.05, 0.5).unwrap();
        assert!((order - 1.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn two_cycle_relation_is_exact() {
        let g = build(2, &[(0, 1), (1, 0)], BetaPolicy::Constant(0.5));
        let d = g.shortest_distances();
        assert!(unnormalized_relation_check(&g, &d, 0.5).unwrap());
        assert_eq!(
            unnormalized_relation_deviation(&g, &d, 0.5, 0.01).unwrap(),
            0.0
        );
    }
}
