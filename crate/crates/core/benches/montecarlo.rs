//! Sequential vs data-parallel Monte Carlo.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use isoqec::codesim::{corrected_fidelity_mc, raw_fidelity_mc};
use isoqec::sampler::sampling_table;
use isoqec::{BlockCode, CodeParams, Estimator, Exec, IsotropicDensity, McConfig};

fn bench_fidelity(c: &mut Criterion) {
    let params = CodeParams::new(5, 1).unwrap();
    let marginal =
        sampling_table(&IsotropicDensity::normal(0.9, params.d as u32).unwrap()).unwrap();
    let code = BlockCode::new(params);
    let config = McConfig::new(50_000, 1);

    let mut group = c.benchmark_group("fidelity_mc");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(
            BenchmarkId::new("raw", format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| raw_fidelity_mc(black_box(&marginal), &config, exec).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("corrected", format!("{exec:?}")),
            &exec,
            |b, &exec| {
                b.iter(|| {
                    corrected_fidelity_mc(
                        black_box(&marginal),
                        &code,
                        &config,
                        Estimator::BlockSum,
                        exec,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_fidelity);
criterion_main!(benches);
