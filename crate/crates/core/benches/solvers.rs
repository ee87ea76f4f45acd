use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bfl::evolve::{init_front_like, Evolver, Omega0, SimConfig, TimeStep};
use bfl::flow::GravityDir;
use bfl::grid::{BoundaryKind, ScalarField, StripGrid};
use bfl::harness::run_many;
use bfl::inequality::{nash_minimum, FuzzField};
use bfl::par::Exec;
use bfl::reaction::ReactionModel;
use bfl::spectral::EllipticPlan;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn sim(nx: usize, nz: usize, exec: Exec) -> SimConfig {
    let g = StripGrid::new(32.0, 4.0, nx, nz).unwrap();
    let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
    let mut c = SimConfig::new(g, r, 0.2, 1.0, GravityDir::from_degrees(45.0));
    c.omega0 = Omega0::Random { seed: 1, energy: 1e-4 };
    c.exec = exec;
    c
}

fn helmholtz(c: &mut Criterion) {
    let mut group = c.benchmark_group("helmholtz");
    for n in [257usize, 513] {
        let g = StripGrid::new(32.0, 4.0, n, 65).unwrap();
        let bc = BoundaryKind::temperature();
        let mut rhs = ScalarField::from_fn(g, bc, |x, z| 0.5 - x / 64.0 + 0.01 * (x * z).sin());
        rhs.enforce_bc();
        for (name, exec) in MODES {
            let plan = EllipticPlan::new(g, bc).unwrap().with_exec(exec);
            group.bench_with_input(BenchmarkId::new(name, n), &rhs, |b, rhs| {
                b.iter(|| plan.helmholtz(black_box(rhs), 0.01).unwrap())
            });
        }
    }
    group.finish();
}

fn evolver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolver_step");
    for (name, exec) in MODES {
        let cfg = sim(513, 65, exec);
        let ev = Evolver::new(cfg.clone()).unwrap();
        let state = init_front_like(&cfg).unwrap();
        group.bench_function(name, |b| b.iter(|| ev.step(black_box(&state), 0.01).unwrap()));
    }
    group.finish();
}

fn nash(c: &mut Criterion) {
    let mut group = c.benchmark_group("nash_minimum");
    group.sample_size(10);
    let g = StripGrid::new(20.0, 1.0, 161, 17).unwrap();
    let corpus = FuzzField::corpus(1, 200, g.a(), g.lambda());
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| nash_minimum(black_box(&corpus), g, exec).unwrap()));
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_many");
    group.sample_size(10);
    for (name, exec) in MODES {
        let configs: Vec<SimConfig> = [0.0, 0.1, 0.2, 0.3]
            .iter()
            .map(|&rho| {
                let mut s = sim(129, 17, exec);
                s.rho = rho;
                s.omega0 = Omega0::Zero;
                s.dt = TimeStep::Fixed(0.05);
                s.t_end = 2.0;
                s
            })
            .collect();
        group.bench_function(name, |b| b.iter(|| run_many(black_box(&configs), (1.0, 2.0), exec)));
    }
    group.finish();
}

criterion_group!(benches, helmholtz, evolver_step, nash, sweep);
criterion_main!(benches);
