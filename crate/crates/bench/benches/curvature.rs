use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dirricci_bench::random_digraph;
use dirricci_core::fixtures::nonsymmetric_triangle;
use dirricci_core::{curvature_field, kappa_lly, kappa_star, run_flow, BetaPolicy, FlowConfig};

fn edge_curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("edge_curvature");
    for n in [8usize, 16, 32] {
        let g = random_digraph(n, 0.3, 7);
        let d = g.shortest_distances();
        let e = *g.edge(0);
        group.bench_with_input(BenchmarkId::new("lipschitz_lp", n), &n, |b, _| {
            b.iter(|| kappa_lly(&g, &d, e.tail, e.head).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("star_coupling_lp", n), &n, |b, _| {
            b.iter(|| kappa_star(&g, &d, e.tail, e.head).unwrap())
        });
    }
    group.finish();
}

fn field(c: &mut Criterion) {
    let g = random_digraph(24, 0.2, 11);
    let d = g.shortest_distances();
    let sigma = g.total_weight();
    c.bench_function("curvature_field_n24", |b| {
        b.iter(|| curvature_field(&g, &d, sigma).unwrap())
    });
}

fn flow(c: &mut Criterion) {
    let g = nonsymmetric_triangle(BetaPolicy::Constant(0.2));
    let d = g.shortest_distances();
    let config = FlowConfig {
        stop_tolerance: 0.0,
        ..FlowConfig::default()
    };
    c.bench_function("triangle_flow_200_steps", |b| {
        b.iter(|| run_flow(&g, &d, &config).unwrap())
    });
}

criterion_group!(benches, edge_curvature, field, flow);
criterion_main!(benches);
