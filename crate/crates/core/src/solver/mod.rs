//! Finite-volume solver for `w_t + A1 w_x + A2 w_y = -B w` on a rectangle.
//!
//! Cell averages are advanced with a MUSCL scheme: componentwise minmod
//! reconstruction, exact upwind flux splitting `A+ w_L + A- w_R`, and a
//! two-stage SSP Runge-Kutta integrator with ghost refill before each stage.
//! The time step is `cfl / (rho_1 / dx + rho_2 / dy)` with the spectral radii
//! `rho_k` of the Jacobians.

mod ghosts;
mod grid;
mod muscl;

pub use ghosts::{fill_ghosts, BoundaryPolicy, ComponentBc, SideCondition, SvControlSetup};
pub use grid::{Grid, GridState};
pub use muscl::{
    directional_speeds, max_wave_speed, muscl_step, Execution, Observer, RunSummary, Solver,
    StepContext, StepReport,
};
