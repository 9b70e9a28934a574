use criterion::{criterion_group, criterion_main, Criterion};
use glsm_bench::{insertions, quintic, rank_two};
use glsm_core::scalar::int;
use glsm_core::{glsm_I_with, invariants_trivial, EngineOptions};

fn series(c: &mut Criterion) {
    let q = quintic();
    let t = insertions(&["t=rho1"], &q);
    let mut g = c.benchmark_group("glsm_I");
    g.sample_size(10);
    for threads in [1, 4] {
        g.bench_function(format!("quintic qb4 t1 threads{threads}"), |b| {
            b.iter(|| glsm_I_with(&q, &t, &int(4), 1, None, EngineOptions { threads }).unwrap())
        });
    }
    let m = rank_two();
    let none = insertions(&[], &m);
    g.bench_function("rank-two qb3", |b| b.iter(|| glsm_I_with(&m, &none, &int(3), 0, None, EngineOptions { threads: 1 }).unwrap()));
    g.finish();
}

fn gordan(c: &mut Criterion) {
    let m = rank_two();
    let all: Vec<usize> = (0..m.r).collect();
    c.bench_function("invariants_trivial rank-two", |b| b.iter(|| invariants_trivial(&m, &all, false)));
}

criterion_group!(benches, series, gordan);
criterion_main!(benches);
