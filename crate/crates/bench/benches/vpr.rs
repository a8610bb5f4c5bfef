use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use topowalk::topo::{close_loops, close_loops_exhaustive, linear_scan};
use topowalk_bench::chain_map;

fn loop_detection(c: &mut Criterion) {
    let mut group = c.benchmark_group("loop-detection");
    group.sample_size(10);
    for n in [1000, 5000] {
        let chain = chain_map(n, 0.4, 0);
        group.bench_with_input(BenchmarkId::new("ball-tree", n), &chain, |b, g| {
            b.iter(|| close_loops(&mut g.clone()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("exhaustive", n), &chain, |b, g| {
            b.iter(|| close_loops_exhaustive(&mut g.clone()).unwrap())
        });
    }
    group.finish();
}

fn single_query(c: &mut Criterion) {
    let chain = chain_map(5000, 0.4, 1);
    let tree = chain.ball_tree().unwrap();
    let points = chain.vlad_matrix();
    let q = points[1234].clone();
    let mut group = c.benchmark_group("top5-query");
    group.bench_function("ball-tree", |b| b.iter(|| tree.query_within(&q, 5, 0.4).unwrap()));
    group.bench_function("linear-scan", |b| b.iter(|| linear_scan(&points, &q, 5)));
    group.finish();
}

criterion_group!(benches, loop_detection, single_query);
criterion_main!(benches);
