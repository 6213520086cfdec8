mod common;

use dirricci_core::curvature::edge_curvatures;
use dirricci_core::fixtures::nonsymmetric_triangle;
use dirricci_core::flow::{curvature_constant, discrete_flow};
use dirricci_core::measures::mu_alpha;
use dirricci_core::transport::{w1, w1_convexity_check};
use dirricci_core::{
    curvature_bound, curvature_field, kappa_alpha, kappa_lly, kappa_star, max_stable_step,
    run_flow, w1_dual, w1_primal, BetaPolicy, DiGraph, FlowConfig, Integrator, ProbabilityMeasure,
    StepSize,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(max_n: usize) -> impl Strategy<Value = DiGraph> {
    any::<u64>()
        .prop_map(move |seed| common::random_graph(&mut ChaCha8Rng::seed_from_u64(seed), max_n))
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityMeasure {
    let mut mass: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.6) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    if mass.iter().all(|&m| m == 0.0) {
        mass[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = mass.iter().sum();
    let pairs = mass
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(v, &m)| (v, m / total));
    ProbabilityMeasure::new(pairs).unwrap()
}

fn scaled(g: &DiGraph, c: f64) -> DiGraph {
    g.with_weights(&g.weights().iter().map(|w| w * c).collect::<Vec<_>>())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distances_form_a_quasi_metric(g in graph(10), c in 0.01f64..100.0) {
        let d = g.shortest_distances();
        prop_assert!(d.check_triangle_inequality(1e-12).is_ok());
        for x in 0..g.num_vertices() {
            prop_assert_eq!(d.get(x, x), 0.0);
        }
        for e in g.edges() {
            prop_assert!(d.get(e.tail, e.head) <= e.length);
        }
        prop_assert_eq!(scaled(&g, c).shortest_distances(), d);
    }

    #[test]
    fn transport_duality_and_feasibility(g in graph(7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = g.shortest_distances();
        let n = g.num_vertices();
        let (mu, nu, rho) = (random_measure(&mut rng, n), random_measure(&mut rng, n), random_measure(&mut rng, n));
        let plan = w1_primal(&mu, &nu, &d).unwrap();
        let potential = w1_dual(&mu, &nu, &d).unwrap();
        prop_assert!((plan.value - potential.value).abs() <= 1e-8);
        prop_assert!(plan.value >= -1e-12);
        prop_assert!(plan.marginal_error(&mu, &nu, n) <= 1e-9);
        prop_assert!(plan.pi.values().all(|&p| p >= -1e-9));
        prop_assert!(potential.lipschitz_violation(&d) <= 1e-9);
        let via = w1(&mu, &nu, &d).unwrap() + w1(&nu, &rho, &d).unwrap();
        prop_assert!(w1(&mu, &rho, &d).unwrap() <= via + 1e-8);
    }

    #[test]
    fn curvature_formulations_agree(g in graph(7)) {
        let d = g.shortest_distances();
        let kappa = edge_curvatures(&g, &d).unwrap();
        for (e, edge) in g.edges().iter().enumerate() {
            let (star, coupling) = kappa_star(&g, &d, edge.tail, edge.head).unwrap();
            prop_assert!((kappa[e] - star).abs() <= 1e-7, "edge {}: {} vs {}", e, kappa[e], star);
            prop_assert!(kappa[e].abs() <= curvature_bound(&d, edge.tail, edge.head) + 1e-8);
            let mu_x = mu_alpha(&g, edge.tail, 0.0).unwrap();
            let mu_y = mu_alpha(&g, edge.head, 0.0).unwrap();
            prop_assert!(coupling.max_violation(&mu_x, &mu_y, g.num_vertices()) <= 1e-9);
        }
    }

    #[test]
    fn alpha_curvature_is_concave_and_monotone(g in graph(6), a1 in 0.0f64..1.0, a2 in 0.0f64..1.0, lambda in 0.0f64..=1.0) {
        let d = g.shortest_distances();
        let edge = g.edge(0);
        let (x, y) = (edge.tail, edge.head);
        let k = |alpha: f64| kappa_alpha(&g, &d, x, y, alpha).unwrap();
        let mid = lambda * a1 + (1.0 - lambda) * a2;
        prop_assert!(k(mid) >= lambda * k(a1) + (1.0 - lambda) * k(a2) - 1e-8);
        prop_assert!(k(1.0).abs() <= 1e-12);

        let limit = kappa_lly(&g, &d, x, y).unwrap();
        let bound = curvature_bound(&d, x, y);
        let mut prev = f64::NEG_INFINITY;
        for alpha in [0.5, 0.9, 0.99, 0.999] {
            let ratio = k(alpha) / (1.0 - alpha);
            prop_assert!(ratio >= prev - 1e-9);
            prop_assert!(ratio <= limit + 1e-9);
            prop_assert!(ratio <= bound + 1e-8);
            prop_assert!(limit - ratio < 10.0 * (1.0 - alpha));
            prev = ratio;
        }
    }

    #[test]
    fn curvature_field_is_scale_invariant(g in graph(7), c in 0.01f64..100.0) {
        let d = g.shortest_distances();
        let a = curvature_field(&g, &d, g.total_weight()).unwrap();
        let h = scaled(&g, c);
        let b = curvature_field(&h, &d, h.total_weight()).unwrap();
        for (x, y) in a.kappa.iter().zip(&b.kappa) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!((a.kappa_bar_sigma - b.kappa_bar_sigma).abs() <= 1e-10);
    }

    #[test]
    fn convexity_on_triangle(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let g = nonsymmetric_triangle(BetaPolicy::Constant(0.2));
        let d = g.shortest_distances();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<_> = (0..4).map(|_| random_measure(&mut rng, 3)).collect();
        prop_assert!(w1_convexity_check(&m[0], &m[1], &m[2], &m[3], lambda, &d).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn discrete_flow_conserves_and_stays_positive(g in graph(6)) {
        let d = g.shortest_distances();
        let config = FlowConfig {
            step_size: StepSize::Fixed(max_stable_step(&g, &d)),
            max_steps: 40,
            ..FlowConfig::default()
        };
        let trace = discrete_flow(&g, &d, &config).unwrap();
        for step in &trace.steps {
            prop_assert!((step.weights.iter().sum::<f64>() - trace.sigma).abs() <= 1e-9);
            prop_assert!(step.volume_drift <= 1e-9);
            prop_assert!(step.weights.iter().all(|&w| w > 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn ode_weights_stay_within_exponential_envelope(g in graph(4)) {
        let d = g.shortest_distances();
        let s = max_stable_step(&g, &d);
        let config = FlowConfig {
            step_size: StepSize::Fixed(s),
            max_steps: (1.0 / s).ceil() as usize,
            stop_tolerance: 0.0,
            integrator: Integrator::Ode,
            ..FlowConfig::default()
        };
        let trace = run_flow(&g, &d, &config).unwrap();
        let spread = 2.0 * curvature_constant(&g, &d);
        let w0 = g.weights();
        for step in trace.steps.iter().filter(|st| st.time <= 1.0 + 1e-12) {
            for (w, w0) in step.weights.iter().zip(&w0) {
                prop_assert!(*w >= w0 * (-spread).exp() && *w <= w0 * spread.exp());
            }
        }
    }
}

#[test]
fn beta_complement_mirrors_the_symmetric_edges() {
    let low = nonsymmetric_triangle(BetaPolicy::Constant(0.2));
    let high = nonsymmetric_triangle(BetaPolicy::Constant(0.8));
    let d = low.shortest_distances();
    for (x, y) in [(2, 0), (0, 2)] {
        let a = kappa_lly(&low, &d, x, y).unwrap();
        let b = kappa_lly(&high, &d, x, y).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn flows_are_bit_identical_across_runs() {
    let g = common::graphs(7, 1, 6).remove(0);
    let d = g.shortest_distances();
    for integrator in [Integrator::Discrete, Integrator::Ode] {
        let config = FlowConfig {
            max_steps: 10,
            integrator,
            ..FlowConfig::default()
        };
        assert_eq!(
            run_flow(&g, &d, &config).unwrap(),
            run_flow(&g, &d, &config).unwrap()
        );
    }
}
