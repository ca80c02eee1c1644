use criterion::{black_box, criterion_group, criterion_main, Criterion};

use brokenline::morse::{connection_graph, find_critical_points};
use brokenline::order::{enumerate_amalgams, LinOrder};
use brokenline::tw::{algebra_to_functor, day_assoc_check, mainc_roundtrip, TwCategory};
use brokenline::{MorseConfig, NonunitalAlgebra, SurfaceModel};

fn amalgams(c: &mut Criterion) {
    let (i, j) = (LinOrder::standard(3), LinOrder::standard(3));
    c.bench_function("amalgams 3x3", |b| b.iter(|| enumerate_amalgams(black_box(&i), black_box(&j)).len()));
}

fn roundtrip(c: &mut Criterion) {
    let a = NonunitalAlgebra::nilpotent3();
    let mut g = c.benchmark_group("mainc");
    g.sample_size(10);
    g.bench_function("nilpotent3 n=3", |b| b.iter(|| mainc_roundtrip(black_box(&a), 3, 1).unwrap().passed()));
    g.finish();
}

fn day(c: &mut Criterion) {
    let f = algebra_to_functor(&NonunitalAlgebra::nilpotent3(), 3).unwrap();
    let cat = TwCategory::enumerate(3);
    let mut g = c.benchmark_group("day");
    g.sample_size(10);
    g.bench_function("assoc nilpotent3 n=3", |b| b.iter(|| day_assoc_check(&f, &f, &f, &cat).passed()));
    g.finish();
}

fn morse(c: &mut Criterion) {
    let s = SurfaceModel::builtin("torus").unwrap();
    let cfg = MorseConfig::default();
    let crit = find_critical_points(&s, &cfg);
    let mut g = c.benchmark_group("morse");
    g.sample_size(10);
    g.bench_function("torus criticals", |b| b.iter(|| find_critical_points(&s, &cfg).len()));
    g.bench_function("torus connections", |b| b.iter(|| connection_graph(&s, &crit, &cfg)));
    g.finish();
}

criterion_group!(benches, amalgams, roundtrip, day, morse);
criterion_main!(benches);
