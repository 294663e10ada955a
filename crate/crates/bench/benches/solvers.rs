use std::hint::black_box;

use calf_bench::UpdateFixture;
use calf_core::agents::{greedy_action, mpc_policy};
use calf_core::critic::try_critic_update;
use calf_core::{qp_solve, CemConfig, ExperimentConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn qp(c: &mut Criterion) {
    let f = UpdateFixture::new();
    let p = f.qp();
    let start = f.ledger.weights().0;
    c.bench_function("qp_solve/critic_update", |b| {
        b.iter(|| qp_solve(black_box(&p), &start, f.cfg.feas_tol))
    });
    c.bench_function("try_critic_update", |b| {
        b.iter(|| try_critic_update(&f.ledger, &f.buffer, black_box(&f.state), &f.action, &f.cfg))
    });
}

fn action_search(c: &mut Criterion) {
    let f = UpdateFixture::new();
    let plant = ExperimentConfig::default().plant();
    c.bench_function("greedy_action", |b| {
        b.iter(|| greedy_action(f.ledger.weights(), black_box(&f.state), &plant))
    });
}

fn cem(c: &mut Criterion) {
    let exp = ExperimentConfig::default();
    let plant = exp.plant();
    let mut g = c.benchmark_group("cem_plan");
    g.sample_size(10);
    for h in [10, 15] {
        g.bench_function(format!("horizon_{h}"), |b| {
            b.iter(|| {
                mpc_policy(
                    black_box(&exp.start),
                    h,
                    &CemConfig::default(),
                    &plant,
                    &exp.hotspot,
                    None,
                )
            })
        });
    }
    g.finish();
}

criterion_group!(benches, qp, action_search, cem);
criterion_main!(benches);
