use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use steinlab_core::models::{BaseMeasure, BaseMeasureSpec, ColoredGraphModel, CurieWeissModel, Graph, HeisenbergModel};
use steinlab_core::pair::sample_bound;
use steinlab_core::sweep::sample_statistics;
use steinlab_core::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn statistics(c: &mut Criterion) {
    let cw = CurieWeissModel::new(BaseMeasure::new(BaseMeasureSpec::TwoPoint).unwrap(), 1.0, 1600).unwrap();
    let hb = HeisenbergModel::new(4.0, 250).unwrap();
    let mut group = c.benchmark_group("sample_statistics");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("curie_weiss_n1600", name), &exec, |b, &e| {
            b.iter(|| sample_statistics(&cw, 20_000, 1, e))
        });
        group.bench_with_input(BenchmarkId::new("heisenberg_n250", name), &exec, |b, &e| {
            b.iter(|| sample_statistics(&hb, 2_000, 1, e))
        });
    }
    group.finish();
}

fn bound_terms(c: &mut Criterion) {
    let graph = ColoredGraphModel::new(Graph::complete(128).unwrap(), 128).unwrap();
    let mut group = c.benchmark_group("sample_bound");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("complete_graph_n128", name), &exec, |b, &e| {
            b.iter(|| sample_bound(&graph, 5_000, 1, e).unwrap().theorem(e))
        });
    }
    group.finish();
}

criterion_group!(benches, statistics, bound_terms);
criterion_main!(benches);
