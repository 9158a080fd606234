//! Monte Carlo and batch solving on a one-thread pool against the default pool.
//!
//! `cargo bench --no-default-features` runs the same benches on the
//! sequential build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use impulse_dividend::fixtures;
use impulse_dividend::par;
use impulse_dividend::simulate::{simulate_policy, SimConfig};
use impulse_dividend::solver::solve_spec;
use impulse_dividend::verify::{qvi_report, DEFAULT_GRID};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::current_num_threads().max(2);
    [1, all]
        .into_iter()
        .map(|n| {
            let label = if par::is_parallel() { format!("threads={n}") } else { format!("sequential-build/{n}") };
            (label, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap())
        })
        .collect()
}

fn monte_carlo(c: &mut Criterion) {
    let (p, sol) = solve_spec(&fixtures::g1()).unwrap();
    let m = p.basis.model();
    let cfg = SimConfig {
        n_paths: 8192,
        seed: 1,
        ..SimConfig::new(0.15, m.lambda())
    };
    let mut group = c.benchmark_group("simulate_policy");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| pool.install(|| simulate_policy(m, &sol.policy, black_box(&cfg)).unwrap()))
        });
    }
    group.finish();
}

fn batch_verify(c: &mut Criterion) {
    let specs = vec![
        fixtures::p_shape(),
        fixtures::r2(),
        fixtures::g1(),
        fixtures::g2(),
        fixtures::g3(),
        fixtures::h3(),
    ];
    let mut group = c.benchmark_group("solve_and_verify");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| {
                pool.install(|| {
                    par::map(&specs, |s| {
                        let (p, sol) = solve_spec(s).unwrap();
                        qvi_report(&p.basis, &sol, DEFAULT_GRID).passed
                    })
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, batch_verify);
criterion_main!(benches);
