use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hypstab::boundary::SvControlGains;
use hypstab::solver::{BoundaryPolicy, Execution, Grid, GridState, Solver};
use hypstab::systems::{saint_venant, SaintVenantParams};

fn sv_step(c: &mut Criterion) {
    let p = SaintVenantParams::default();
    let policy = BoundaryPolicy::saint_venant(p, SvControlGains::defaults(&p)).unwrap();
    let base = Solver::new(saint_venant(&p).unwrap(), policy, 0.5).unwrap();
    let mut group = c.benchmark_group("saint_venant_step");
    for dx in [0.02, 0.01, 0.005] {
        let grid = Grid::with_spacing([0.0, 0.0], p.domain_l, 1.0, dx, dx).unwrap();
        let dt = base.time_step(&grid);
        let cells = format!("{}x{}", grid.nx, grid.ny);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let solver = base.clone().with_execution(exec);
            let mut state = GridState::from_fn(grid, 3, |_| vec![1.0; 3]);
            group.bench_with_input(BenchmarkId::new(name, &cells), &dt, |b, dt| {
                b.iter(|| solver.step(&mut state, *dt).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sv_step);
criterion_main!(benches);
