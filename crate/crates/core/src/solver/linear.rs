use ndarray::{Array2, Array3};

use super::field::{LinearDelayField, SmoothDelayField};
use super::step::{assign_derivative, check_step, mat, row, StepWork};
use crate::error::Result;
use crate::grid::Segment;
use crate::rough::DelayedRoughPath;

/// Explicit compensated-sum march of `dy = σ(y_t, ξ_{t−r}) d𝐗` across
/// `[s, s + r]`, starting from `y_s = ξ_s`.
///
/// On each step the integrand is `σ(y_j, ξ_{j−N})` with `ζ⁰ = ∂₁σ · y′_j`,
/// `ζ¹ = ∂₂σ · ξ′_{j−N}` and `y′_j = σ(y_j, ξ_{j−N})`.
pub(crate) fn march(field: &dyn SmoothDelayField, xi: &Segment, drp: &DelayedRoughPath, s: usize) -> Result<Segment> {
    check_step(xi, drp, s, field)?;
    let n = xi.delay_steps();
    let (w, d) = (field.state_dim(), field.noise_dim());
    let mut y = Array2::zeros((n + 1, w));
    let mut gub = Array3::zeros((n + 1, w, d));
    y.row_mut(0).assign(&xi.right_value());
    let mut work = StepWork::new(w, d);
    let mut yprime = vec![0.0; w * d];
    let mut next = vec![0.0; w];
    for j in 0..n {
        field.eval(row(&y, j), row(xi.values(), j), &mut yprime);
        work.advance(
            field,
            drp,
            s + j,
            row(&y, j),
            &yprime,
            row(xi.values(), j),
            mat(xi.gubinelli(), j),
            row(&y, j),
            &mut next,
        );
        for a in 0..w {
            y[[j + 1, a]] = next[a];
        }
    }
    assign_derivative(field, &y, xi, &mut gub);
    Segment::new(s, xi.step(), y, gub)
}

/// Solution segment on `[s, s + r]` of the linear equation
/// `dy = (σ₁ y_t + σ₂ y_{t−r}) d𝐗` with history `xi` on `[s − r, s]`.
pub fn solve_linear_step(xi: &Segment, field: &LinearDelayField, drp: &DelayedRoughPath, s: usize) -> Result<Segment> {
    if xi.is_zero() {
        super::step::check_step(xi, drp, s, field)?;
        return Segment::new(
            s,
            xi.step(),
            Array2::zeros(xi.values().dim()),
            Array3::zeros(xi.gubinelli().dim()),
        );
    }
    march(field, xi, drp, s)
}
