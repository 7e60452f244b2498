use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rmsprop_iss::{run, verify_suite, SamplerConfig, Schedule, StepInput, Tolerance, Transition, DEFAULT_Q};
use rmsprop_iss_bench::{quadratic, reference_params, spread_state};

fn transition_checks(c: &mut Criterion) {
    let mut group = c.benchmark_group("transition_checks");
    for dim in [1usize, 10, 50] {
        let (obj, cert) = quadratic(dim);
        let st = spread_state(&obj);
        let u = StepInput::new(0.5).unwrap();
        group.bench_with_input(BenchmarkId::new("delta_v", dim), &dim, |b, _| {
            b.iter(|| Transition::new(&cert.spec, &obj, black_box(&st), u).unwrap().delta_v)
        });
        let tr = Transition::new(&cert.spec, &obj, &st, u).unwrap();
        group.bench_with_input(BenchmarkId::new("intermediate_bound", dim), &dim, |b, _| {
            b.iter(|| cert.check_intermediate_bound(black_box(&tr)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("iss_decrease", dim), &dim, |b, _| {
            b.iter(|| cert.check_iss_decrease(&obj, black_box(&tr)).global_margin)
        });
    }
    group.finish();
}

fn alpha_inverse(c: &mut Criterion) {
    let (_, cert) = quadratic(10);
    c.bench_function("alpha_inverse", |b| b.iter(|| cert.alpha_inverse(black_box(0.3))));
}

fn trajectory(c: &mut Criterion) {
    let (obj, _) = quadratic(10);
    let st = spread_state(&obj);
    let sched = Schedule::Sinusoid {
        amplitude: 1.0,
        period: 250.0,
    };
    c.bench_function("run_10k_steps_d10", |b| {
        b.iter(|| run(&reference_params(), &obj, black_box(&st), &sched, 10_000).unwrap().len())
    });
}

fn suite(c: &mut Criterion) {
    let (obj, _) = quadratic(10);
    let cfg = SamplerConfig {
        n: 1_000,
        trajectories: 1,
        trajectory_steps: 100,
        ..SamplerConfig::default()
    };
    let mut group = c.benchmark_group("verify_suite");
    group.sample_size(10);
    group.bench_function("n1000_d10", |b| {
        b.iter(|| verify_suite(&reference_params(), &obj, DEFAULT_Q, &cfg, Tolerance::default()).unwrap().all_passed())
    });
    group.finish();
}

criterion_group!(benches, transition_checks, alpha_inverse, trajectory, suite);
criterion_main!(benches);
