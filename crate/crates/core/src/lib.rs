//! Numerical core for a coupled gas-radiation kinetic model.
//!
//! Closed-form equilibria and collision kinematics live in [`physics`];
//! the reduced nonelastic collision integrals in [`collision`]; the
//! level-curve scan in [`levelscan`]; slab and 3D transport solvers in
//! [`slab`] and [`domain3d`]; the linearized three-level solver in
//! [`three_level`]; Monte Carlo identity checks in [`verify`].
//!
//! Grid-shaped work (scan cells, Monte Carlo batches, lattice sweeps) is
//! dispatched through [`Exec`], which uses rayon when the `parallel`
//! feature is on and falls back to a plain loop otherwise. Results never
//! depend on the execution mode.

pub mod collision;
pub mod domain3d;
pub mod error;
pub mod exec;
pub mod levelscan;
pub mod physics;
pub mod quad;
pub mod slab;
pub mod special;
pub mod three_level;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;

/// 3-vector used for velocities, directions and points.
pub type Vec3 = nalgebra::Vector3<f64>;
