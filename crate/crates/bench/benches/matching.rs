use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rideshare_bench::dense_pool;
use rideshare_core::matching::max_weight_matching;
use rideshare_core::SavingsGraph;

fn savings_graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("savings_graph");
    for n in [10, 40, 160] {
        let (net, pool, now) = dense_pool(15, n, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| SavingsGraph::build(&pool, now, &net))
        });
    }
    group.finish();
}

fn blossom(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_weight_matching");
    for n in [10, 40, 160] {
        let (net, pool, now) = dense_pool(15, n, 7);
        let graph = SavingsGraph::build(&pool, now, &net);
        group.bench_with_input(BenchmarkId::from_parameter(n), &graph, |b, g| b.iter(|| max_weight_matching(g)));
    }
    group.finish();
}

criterion_group!(benches, savings_graph, blossom);
criterion_main!(benches);
