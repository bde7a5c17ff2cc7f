use serde::Serialize;

use super::flow::StepSolver;
use super::step::segment_path;
use crate::error::{invalid, Result};
use crate::grid::{euclid, HoelderParams, Segment};
use crate::rough::{d2beta_distance, rho_distance_on, DelayedRoughPath};

/// The a priori envelope of the linear equation for a supplied constant `c`:
///
/// ```text
/// c (1 + r^{γ−β} ‖X‖_γ) ‖ξ‖ exp{ c (‖σ‖ (‖X‖_γ + ‖𝕏‖_{2γ} + ‖𝕏(−r)‖_{2γ}))^{1/(γ−β)} }
/// ```
pub fn a_priori_rhs(
    xi_norm: f64,
    driver_norms: [f64; 3],
    params: &HoelderParams,
    sigma_norm: f64,
    r: f64,
    c: f64,
) -> Result<f64> {
    params.validate()?;
    if driver_norms.iter().any(|v| *v < 0.0) || xi_norm < 0.0 || sigma_norm < 0.0 || !(r > 0.0) {
        return Err(invalid("norms must be non-negative and the delay positive"));
    }
    let gap = params.gamma - params.beta;
    let a: f64 = driver_norms.iter().sum();
    Ok(c * (1.0 + r.powf(gap) * driver_norms[0]) * xi_norm * (c * (sigma_norm * a).powf(1.0 / gap)).exp())
}

/// `θ` of the step-size choice in the a priori argument,
/// `1 / ((4 M A)^{1/(γ−β)} + (4(1 + ‖σ‖))^{1/β} + 1 + 1/r)`.
pub fn a_priori_step(m: f64, a: f64, sigma_norm: f64, params: &HoelderParams, r: f64) -> f64 {
    let gap = params.gamma - params.beta;
    1.0 / ((4.0 * m * a).powf(1.0 / gap) + (4.0 * (1.0 + sigma_norm)).powf(1.0 / params.beta) + 1.0 + 1.0 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityGap {
    /// `d_{2β}` of the two solutions on `[0, r]`.
    pub lhs: f64,
    /// `|ξ_{−r} − ξ̃_{−r}| + |ξ′_{−r} − ξ̃′_{−r}| + d_{2β}(ξ, ξ̃) + ϱ_γ(𝐗, 𝐗̃)`.
    pub rhs_factor: f64,
    /// `lhs / rhs_factor`, or 0 when both vanish.
    pub ratio: f64,
}

/// Compares the solutions on `[s, s + r]` from `(xi, drp)` and
/// `(xi_tilde, drp_tilde)`, where both histories end at `s`.
pub fn stability_gap(
    xi: &Segment,
    xi_tilde: &Segment,
    drp: &DelayedRoughPath,
    drp_tilde: &DelayedRoughPath,
    solver: &dyn StepSolver,
    params: &HoelderParams,
) -> Result<StabilityGap> {
    if xi.values().dim() != xi_tilde.values().dim() || xi.base_index() != xi_tilde.base_index() {
        return Err(invalid("histories have different window shapes"));
    }
    let s = xi.end_index();
    let n = xi.delay_steps();
    let y = solver.step(xi, drp, s)?;
    let y_tilde = solver.step(xi_tilde, drp_tilde, s)?;
    let lhs = d2beta_distance(&segment_path(&y, drp)?, &segment_path(&y_tilde, drp_tilde)?, params)?;
    let v0 = euclid(xi.values().row(0).iter().zip(xi_tilde.values().row(0).iter()).map(|(a, b)| a - b));
    let d0 = euclid(
        xi.gubinelli()
            .index_axis(ndarray::Axis(0), 0)
            .iter()
            .zip(xi_tilde.gubinelli().index_axis(ndarray::Axis(0), 0).iter())
            .map(|(a, b)| a - b),
    );
    let hist = d2beta_distance(&segment_path(xi, drp)?, &segment_path(xi_tilde, drp_tilde)?, params)?;
    let rho = rho_distance_on(drp, drp_tilde, params.gamma, s, s + n)?;
    let rhs_factor = v0 + d0 + hist + rho;
    let ratio = if rhs_factor == 0.0 { 0.0 } else { lhs / rhs_factor };
    Ok(StabilityGap { lhs, rhs_factor, ratio })
}
