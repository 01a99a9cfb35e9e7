//! Closed-loop Saint-Venant run on [0, 3] x [0, 1] with the default gains,
//! printing the Lyapunov ratio against `e^{-1.4 t}` for both weights.
//!
//! `cargo run --release --example saint_venant_decay -- 100`

use hypstab::boundary::SvControlGains;
use hypstab::monitor::{fit_decay, sv_weights, LyapunovRecorder, WeightStyle};
use hypstab::solver::{BoundaryPolicy, Grid, GridState, Solver};
use hypstab::systems::{saint_venant, SaintVenantParams};

fn main() -> hypstab::Result<()> {
    let per_unit: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let p = SaintVenantParams::default();
    let sys = saint_venant(&p)?;
    let grid = Grid::new(3 * per_unit, per_unit, [0.0, 0.0], p.domain_l, 1.0)?;
    let mut state = GridState::from_fn(grid, 3, |_| vec![1.0; 3]);
    let policy = BoundaryPolicy::saint_venant(p, SvControlGains::defaults(&p))?;
    let solver = Solver::new(sys, policy, 0.5)?;
    let mut rec = LyapunovRecorder::new(vec![
        ("exp".into(), sv_weights(&p, WeightStyle::Exponential)?),
        ("lin".into(), sv_weights(&p, WeightStyle::Linear)?),
    ]);
    let summary = solver.run(&mut state, 3.0, &mut [&mut rec])?;
    println!("steps = {}, dt = {:.3e}", summary.steps, summary.dt);
    for k in 0..2 {
        let v = rec.values(k);
        let worst = rec
            .times()
            .iter()
            .zip(v)
            .filter(|(t, _)| **t >= 0.1)
            .map(|(t, l)| l / (v[0] * (-1.4 * t).exp()))
            .fold(0.0, f64::max);
        let rate = fit_decay(&rec.series(k)?)?;
        println!(
            "{}: L(3)/L0 = {:.4e}, worst ratio = {worst:.4}, fitted rate = {rate:.4}",
            rec.names()[k],
            v[v.len() - 1] / v[0]
        );
    }
    Ok(())
}
