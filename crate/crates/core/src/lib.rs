//! Boundary feedback stabilization of two-dimensional linear hyperbolic
//! systems.
//!
//! The crate covers the full pipeline:
//!
//! * [`smallmat`]: small dense symmetric linear algebra (Jacobi eigensolver,
//!   SPD square roots, definiteness classification).
//! * [`systems`]: system specifications, including the Saint-Venant and
//!   diagonal examples and the symmetrization of SSC block systems.
//! * [`lmi`]: feasibility of the stabilization LMI and construction of
//!   Lyapunov potentials.
//! * [`boundary`]: pencils, characteristic decompositions and control laws.
//! * [`solver`]: a MUSCL finite-volume solver for the closed loop.
//! * [`monitor`]: Lyapunov weights, quadrature and decay fitting.
//! * [`cli`]: run configuration and command implementations.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod lmi;
pub mod monitor;
pub mod smallmat;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
