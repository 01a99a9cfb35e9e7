//! Diagonal system with the scalar boundary control, `C_L = 4`, sinusoidal
//! initial data; prints the Lyapunov ratio against `e^{-C_L t}`.
//!
//! `cargo run --release --example diagonal_decay -- 100`

use std::f64::consts::TAU;

use hypstab::monitor::{diag_weights, fit_decay, LyapunovRecorder};
use hypstab::solver::{BoundaryPolicy, Grid, GridState, Solver};
use hypstab::systems::diagonal_example;

fn main() -> hypstab::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let c_l = 4.0;
    let spec = diagonal_example(c_l)?;
    let grid = Grid::new(n, n, [0.0, 0.0], 1.0, 1.0)?;
    let mut state = GridState::from_cell_averages(grid, 3, |[x, y]| {
        vec![(TAU * x).sin() * (TAU * y).sin(); 3]
    });
    let solver = Solver::new(spec.to_system(), BoundaryPolicy::diagonal(spec), 0.5)?;
    let mut rec = LyapunovRecorder::new(vec![("dia".into(), diag_weights(c_l)?)]);
    solver.run(&mut state, 3.0, &mut [&mut rec])?;
    let v = rec.values(0);
    let worst = rec
        .times()
        .iter()
        .zip(v)
        .filter(|(t, _)| **t >= 0.1)
        .map(|(t, l)| l / (v[0] * (-c_l * t).exp()))
        .fold(0.0, f64::max);
    println!(
        "L(3)/L0 = {:.4e}, worst ratio = {worst:.4}, fitted rate = {:.4}",
        v[v.len() - 1] / v[0],
        fit_decay(&rec.series(0)?)?
    );
    Ok(())
}
