use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oscbath::exec::Execution;
use oscbath::langevin::{sample_trajectories, LangevinModel};
use oscbath::profiles::TimeProfile;
use oscbath::propagate::{integrate_r, uniform_grid, IntegratorOptions};
use oscbath::reduce::{reduce_trajectory, CentralGaussian};
use oscbath::scenarios::{ShortTimeParams, Scenario};
use oscbath::system::thermal_f;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn trajectories(c: &mut Criterion) {
    let model = LangevinModel::min_sym(TimeProfile::constant(1.0), TimeProfile::constant(0.1), 1.0, 2.0).unwrap();
    let state0 = CentralGaussian::coherent(1.0, 0.0);
    let grid = uniform_grid(2.0, 2001);
    let mut group = c.benchmark_group("sample_trajectories");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 4096), |b| {
            b.iter(|| sample_trajectories(&model, &state0, &grid, black_box(4096), 1, exec).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let Scenario::ReducedDynamics(params) = Scenario::default_for("reduced-dynamics").unwrap() else {
        unreachable!()
    };
    let spec = params.system;
    let grid = uniform_grid(spec.t_max, 2001);
    let traj = integrate_r(&spec, &grid, &IntegratorOptions::default()).unwrap();
    let f = thermal_f(&spec.bath);
    let mut group = c.benchmark_group("reduce_trajectory");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| reduce_trajectory(black_box(&traj), &spec, &f, exec)));
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let s = Scenario::ShortTimeConvergence(ShortTimeParams::default());
    let mut group = c.benchmark_group("short_time_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| s.run(black_box(1), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, trajectories, reduction, sweep);
criterion_main!(benches);
