//! The subcommands. Each returns the rendered output; writing is left to the
//! caller.

pub mod lyapunov;
pub mod no_semiflow;
pub mod simulate;
pub mod verify;
pub mod wong_zakai;

use rdde_core::drivers::build_driver;
use rdde_core::solver::cocycle_orbit;
use rdde_core::{DelayedRoughPath, Segment};

use crate::config::{DriverSpec, ExperimentConfig, FieldSolver};

/// Solution of the configured equation on `drp` over every solution window,
/// initial history first.
pub(crate) fn trajectory(cfg: &ExperimentConfig, solver: &FieldSolver, drp: &DelayedRoughPath) -> anyhow::Result<Vec<Segment>> {
    let xi = cfg.initial_history(drp)?;
    let mut out = vec![xi.clone()];
    out.extend(cocycle_orbit(&xi, cfg.segments, solver, drp)?);
    Ok(out)
}

pub(crate) fn driver_for(cfg: &ExperimentConfig, seed: u64, spec: DriverSpec) -> anyhow::Result<DelayedRoughPath> {
    Ok(build_driver(&cfg.driver_config(seed, spec))?)
}
