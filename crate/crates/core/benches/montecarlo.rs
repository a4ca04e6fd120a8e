use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mvfactor::dgp::{DgpConfig, NoiseCase};
use mvfactor::evaluation::{run_monte_carlo_with, Execution, McCellConfig};

fn cell(p: usize, q: usize, n: usize) -> McCellConfig {
    let mut cfg = McCellConfig::new(DgpConfig {
        p,
        q,
        r: 3,
        c: 3,
        n,
        a: 0.5,
        delta: 0.0,
        omega: 0.0,
        noise_case: NoiseCase::Identity,
        seed: 1,
    });
    cfg.replications = 16;
    cfg
}

fn montecarlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    for (p, q, n) in [(10, 10, 100), (20, 20, 200)] {
        let cfg = cell(p, q, n);
        let label = format!("{p}x{q}_n{n}");
        let mut modes = vec![("sequential", Execution::Sequential)];
        if cfg!(feature = "parallel") {
            modes.push(("parallel", Execution::Parallel));
        }
        for (name, exec) in modes {
            group.bench_with_input(BenchmarkId::new(name, &label), &cfg, |b, cfg| {
                b.iter(|| run_monte_carlo_with(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, montecarlo);
criterion_main!(benches);
