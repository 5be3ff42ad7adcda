use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinbath::bath::BathSpec;
use spinbath::corr_kernel::{FcorrEvaluator, FcorrOracle, FcorrTable, OracleGrid, Preparation};
use spinbath::master_equation::{build_memory_kernel, SimConfig};
use spinbath::parallel::Execution;
use spinbath::quadrature::QuadraturePolicy;
use spinbath::spin_algebra::SystemParams;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn setup() -> (SystemParams, BathSpec, QuadraturePolicy) {
    (
        SystemParams::new(0.5, 3.5, 10).unwrap(),
        BathSpec::new(0.05, 5.0, 1.0).unwrap(),
        QuadraturePolicy::default(),
    )
}

fn memory_kernel(c: &mut Criterion) {
    let (sys, bath, policy) = setup();
    let mut group = c.benchmark_group("memory_kernel");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SimConfig::with_step(0.5, 2e-3).unwrap();
        cfg.execution = exec;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_memory_kernel(&sys, &bath, &cfg, &policy).unwrap())
        });
    }
    group.finish();
}

fn fcorr_table(c: &mut Criterion) {
    let (sys, bath, policy) = setup();
    let eval = FcorrEvaluator::new(Preparation::DownZ, &sys, &bath, &policy).unwrap();
    let mut group = c.benchmark_group("fcorr_table");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| FcorrTable::build(&eval, 1e-3, 2000, exec).unwrap())
        });
    }
    group.finish();
}

fn fcorr_oracle(c: &mut Criterion) {
    let (sys, bath, _) = setup();
    let mut group = c.benchmark_group("fcorr_oracle");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| FcorrOracle::new(Preparation::DownZ, &sys, &bath, OracleGrid::default(), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, memory_kernel, fcorr_table, fcorr_oracle);
criterion_main!(benches);
