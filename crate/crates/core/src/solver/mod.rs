//! Solvers for `dy = σ(y_t, y_{t−r}) d𝐗`: the direct linear march, Picard
//! iteration for smooth bounded fields, the semi-flow and the discrete cocycle
//! on segments, and the a priori / stability diagnostics.

mod diagnostics;
mod field;
mod flow;
mod linear;
mod picard;
mod step;

pub use diagnostics::{a_priori_rhs, a_priori_step, stability_gap, StabilityGap};
pub use field::{check_partials, ConstantField, FieldBounds, LinearDelayField, SmoothDelayField, TanhField};
pub use flow::{cocycle_apply, cocycle_orbit, compatibility_defect, semi_flow, Picard, StepSolver};
pub use linear::solve_linear_step;
pub use picard::{solve_nonlinear_step, solve_nonlinear_step_with_report, FixedPointConfig, PicardReport, WindowReport};
pub use step::segment_path;
