use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rdpersuasion::locpoly::FitSpec;
use rdpersuasion::oracle::{attainable_range_a2b2_with, PopulationLimits};
use rdpersuasion::sim::{mc_study_with, Dgp, McConfig, Polynomial, SharpDgp};
use rdpersuasion::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let dgp: Dgp = SharpDgp::new(Polynomial::constant(0.4), Polynomial::constant(0.25))
        .unwrap()
        .into();
    let cfg = McConfig::new(10_000, 50, FitSpec::local_linear(0.2).unwrap(), 0.05, 1);
    let mut group = c.benchmark_group("mc_study");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| mc_study_with(&dgp, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let pop = PopulationLimits::new(0.516, 0.46, 1.0, 0.4).unwrap();
    let mut group = c.benchmark_group("attainable_range_a2b2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| attainable_range_a2b2_with(&pop, 1e-3, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, enumeration);
criterion_main!(benches);
