use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use kinpipe::kinetic::{cfl_timestep, step, Execution, SchemeContext};
use kinpipe::scenarios::{steady_state_init, Scenario};

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("kinetic_step");
    for cells in [1_000usize, 10_000, 100_000] {
        let scenario = Scenario { mesh_cells: cells, ..Scenario::water_hammer() };
        let mesh = scenario.mesh().unwrap();
        let state = steady_state_init(&scenario, &mesh).unwrap();
        let dt = cfl_timestep(&state, scenario.constants.c, &mesh, 0.8).unwrap();
        let boundaries = scenario.boundaries();
        group.throughput(Throughput::Elements(cells as u64));
        for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let ctx = SchemeContext::frictionless(&mesh, scenario.constants.c, scenario.constants.g)
                .with_execution(execution);
            group.bench_with_input(BenchmarkId::new(name, cells), &state, |b, s| {
                b.iter(|| step(&ctx, s, dt, &boundaries).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_step);
criterion_main!(benches);
