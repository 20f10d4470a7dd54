use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mpclab::horizon::linspace;
use mpclab::{alpha_closed_form, alpha_lp, min_stabilizing_horizon, stability_region, LpVariant, MRule};
use mpclab_bench::reference_query;

fn closed_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_form");
    for n in [9, 50, 400] {
        let q = reference_query(n, n / 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &q, |b, q| {
            b.iter(|| alpha_closed_form(black_box(q)).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_lp");
    let q = reference_query(12, 5);
    for v in LpVariant::ALL {
        group.bench_with_input(BenchmarkId::new(format!("{v:?}"), 12), &q, |b, q| {
            b.iter(|| alpha_lp(black_box(q), v).unwrap())
        });
    }
    group.finish();
}

fn region(c: &mut Criterion) {
    let cs = linspace(1.0, 20.0, 100);
    let ss = linspace(0.01, 0.99, 100);
    c.bench_function("region_100x100_N7_m3", |b| {
        b.iter(|| stability_region(7, 3, 1.0, black_box(&cs), black_box(&ss)).unwrap())
    });
}

fn min_horizon(c: &mut Criterion) {
    c.bench_function("min_horizon_gamma_1000_half", |b| {
        b.iter(|| min_stabilizing_horizon(black_box(1000.0), 1.0, MRule::HalfN).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = closed_form, oracle, region, min_horizon
}
criterion_main!(benches);
