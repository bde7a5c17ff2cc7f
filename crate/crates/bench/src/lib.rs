//! Shared fixtures for the benchmarks.

use rdde_core::drivers::{lift_ito, DriverConfig};
use rdde_core::{DelayedRoughPath, Segment};

/// Scalar Itô driver with `n` coarse steps per delay over `segments` windows.
pub fn scalar_driver(n: usize, segments: usize, refine: usize) -> DelayedRoughPath {
    lift_ito(&DriverConfig::new(1, n, segments).with_refine(refine).with_seed(7)).expect("valid driver config")
}

/// The smooth history `1 + 0.5 sin(3t)` on the first window.
pub fn history(drp: &DelayedRoughPath) -> Segment {
    Segment::from_fn(drp.grid(), 0, 1, |t| vec![1.0 + 0.5 * (3.0 * t).sin()], |_| vec![0.0]).expect("valid segment")
}
