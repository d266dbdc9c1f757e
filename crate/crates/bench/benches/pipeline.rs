use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ramsey_qa_bench::{reference_grid, reference_params, reference_policy, synthetic_series};
use ramsey_qa_core::{
    analyze, build_problem, dft, diagonalize, gaps, initial_state, step, AnnealPath, FrequencyGrid,
    RamseyPropagator, Schedule, SpectrumSettings, SweepGrid,
};
use std::hint::black_box;

fn bench_step(c: &mut Criterion) {
    let params = reference_params();
    let path = AnnealPath::from_params(&params);
    let sched = Schedule::new(150.0, 10.0).unwrap();
    let h = path.at(40.0, &sched).unwrap();
    let psi = initial_state(&params).unwrap();
    c.bench_function("step", |b| {
        b.iter(|| step(black_box(&psi), black_box(&h), 1e-3).unwrap())
    });
}

fn bench_anneal(c: &mut Criterion) {
    let path = AnnealPath::from_params(&reference_params());
    let policy = reference_policy();
    let mut group = c.benchmark_group("anneal");
    group.sample_size(10);
    for t in [12.5, 37.5] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| RamseyPropagator::new(&path, t, &policy).unwrap())
        });
    }
    group.finish();
}

fn bench_readout(c: &mut Criterion) {
    let path = AnnealPath::from_params(&reference_params());
    let propagator = RamseyPropagator::new(&path, 12.5, &reference_policy()).unwrap();
    let taus = reference_grid().taus();
    c.bench_function("readout_10000", |b| {
        b.iter(|| taus.iter().map(|&t| propagator.probability(t)).sum::<f64>())
    });
}

fn bench_dft(c: &mut Criterion) {
    let mut group = c.benchmark_group("dft");
    group.sample_size(20);
    for n in [1_000, 10_000] {
        let series = synthetic_series(&SweepGrid::new(0.0, 100.0, n).unwrap());
        let nu = FrequencyGrid::new(0.0, 5.0, 0.001).unwrap().points();
        group.bench_with_input(BenchmarkId::from_parameter(n), &series, |b, s| {
            b.iter(|| dft(s, &nu).unwrap())
        });
    }
    group.finish();
}

fn bench_analyze(c: &mut Criterion) {
    let grid = reference_grid();
    let series = synthetic_series(&grid);
    let table = gaps(&diagonalize(&build_problem(&reference_params())).unwrap());
    let settings = SpectrumSettings::for_grid(&grid);
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    group.bench_function("10000", |b| {
        b.iter(|| analyze(&series, &table, &settings).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_step,
    bench_anneal,
    bench_readout,
    bench_dft,
    bench_analyze
);
criterion_main!(benches);
