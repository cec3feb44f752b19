use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qfa_pulse::calibration::{calibrate, RabiScanConfig};
use qfa_pulse::compiler::LoweringPath;
use qfa_pulse::device::{evolve, DensityMatrix};
use qfa_pulse::harness::run_sweep_with_table;
use qfa_pulse::ExperimentConfig;
use qfa_pulse_bench::{fit, rabi_series, Fixture};

fn evolve_words(c: &mut Criterion) {
    let fx = Fixture::new(ExperimentConfig::default()).unwrap();
    let mut group = c.benchmark_group("evolve");
    for path in LoweringPath::ALL {
        for w in [11, 110] {
            let schedule = fx.schedule(w, path).unwrap();
            group.bench_with_input(BenchmarkId::new(path.as_str(), w), &schedule, |b, s| {
                b.iter(|| evolve(&fx.device, black_box(s), &DensityMatrix::ground()).unwrap())
            });
        }
    }
    group.finish();
}

fn fit_rabi_curve(c: &mut Criterion) {
    let series = rabi_series(5.1e6, 0.22222e-9);
    c.bench_function("fit_rabi", |b| b.iter(|| fit(black_box(&series))));
}

fn calibration_scan(c: &mut Criterion) {
    let device = ExperimentConfig::default().device().unwrap().noiseless();
    let scan = RabiScanConfig {
        exact_populations: true,
        ..RabiScanConfig::default()
    };
    let mut group = c.benchmark_group("calibrate");
    group.sample_size(10);
    group.bench_function("default_scan", |b| b.iter(|| calibrate(&device, &scan).unwrap()));
    group.finish();
}

fn small_sweep(c: &mut Criterion) {
    let config = ExperimentConfig {
        max_len: 100,
        ..ExperimentConfig::default()
    };
    let fx = Fixture::new(config).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("max_len_100", |b| {
        b.iter(|| run_sweep_with_table(&fx.config, &fx.table).unwrap())
    });
    group.finish();
}

criterion_group!(benches, evolve_words, fit_rabi_curve, calibration_scan, small_sweep);
criterion_main!(benches);
