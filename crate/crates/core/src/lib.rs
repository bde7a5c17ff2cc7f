//! Numerics for rough and stochastic delay differential equations.
//!
//! * [`grid`]: delay-aligned time grids, sampled paths, segments and grid norms.
//! * [`rough`]: delayed rough paths, controlled paths and the rough integral.
//! * [`drivers`]: Brownian Itô/Stratonovich lifts, mollified and piecewise-linear drivers.
//! * [`solver`]: linear and nonlinear rough delay equation solvers, semi-flow and cocycle.
//! * [`lyapunov`]: volumes, `D_k` bounds and Lyapunov spectrum estimation.
//! * [`checks`]: randomized property checks (Chen, cocycle law, integral order, ...).

pub mod checks;
pub mod drivers;
pub mod error;
pub mod grid;
pub mod lyapunov;
pub mod rough;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{HoelderParams, SampledPath, Segment, TimeGrid};
pub use rough::{ControlledPath, DelayedControlledPath, DelayedRoughPath};
