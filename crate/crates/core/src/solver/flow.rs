use ndarray::{s, Array2, Array3};

use super::field::{LinearDelayField, SmoothDelayField};
use super::linear::solve_linear_step;
use super::picard::{solve_nonlinear_step, FixedPointConfig};
use crate::error::{invalid, Error, Result};
use crate::grid::Segment;
use crate::rough::DelayedRoughPath;

/// Something that advances a segment by one delay window.
pub trait StepSolver: Sync {
    fn field(&self) -> &dyn SmoothDelayField;
    fn step(&self, xi: &Segment, drp: &DelayedRoughPath, s: usize) -> Result<Segment>;
}

impl StepSolver for LinearDelayField {
    fn field(&self) -> &dyn SmoothDelayField {
        self
    }

    fn step(&self, xi: &Segment, drp: &DelayedRoughPath, s: usize) -> Result<Segment> {
        solve_linear_step(xi, self, drp, s)
    }
}

/// A nonlinear field solved by Picard iteration.
pub struct Picard<'a> {
    pub field: &'a dyn SmoothDelayField,
    pub config: FixedPointConfig,
}

impl StepSolver for Picard<'_> {
    fn field(&self) -> &dyn SmoothDelayField {
        self.field
    }

    fn step(&self, xi: &Segment, drp: &DelayedRoughPath, s: usize) -> Result<Segment> {
        solve_nonlinear_step(xi, self.field, drp, s, &self.config)
    }
}

/// `|ξ′_s − σ(ξ_s, ξ_{s−r})|` at the right end of `xi`.
pub fn compatibility_defect(xi: &Segment, field: &dyn SmoothDelayField) -> f64 {
    let (w, d) = (field.state_dim(), field.noise_dim());
    let n = xi.delay_steps();
    let mut m = vec![0.0; w * d];
    let y: Vec<f64> = xi.right_value().to_vec();
    let z: Vec<f64> = xi.left_value().to_vec();
    field.eval(&y, &z, &mut m);
    let g = xi.gubinelli().index_axis(ndarray::Axis(0), n);
    m.iter().zip(g.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// The semi-flow `φ(s, t, ξ)`: the solution window `[t − r, t]` for history
/// `xi` on `[s − r, s]`.
///
/// When the window `[t − r, t]` straddles `s` (that is, `0 < t − s < r`), the
/// glued path is controlled only if `ξ′_s = σ(ξ_s, ξ_{s−r})`; otherwise an
/// invalid-argument error reports the defect.
pub fn semi_flow(xi: &Segment, s: usize, t: usize, solver: &dyn StepSolver, drp: &DelayedRoughPath) -> Result<Segment> {
    if t < s {
        return Err(invalid(format!("semi-flow needs s ≤ t, got s = {s}, t = {t}")));
    }
    if xi.end_index() != s {
        return Err(invalid(format!("segment ends at {}, not at s = {s}", xi.end_index())));
    }
    if t == s {
        return Ok(xi.clone());
    }
    let n = xi.delay_steps();
    if !(t - s).is_multiple_of(n) && t - s < n {
        let defect = compatibility_defect(xi, solver.field());
        let scale = 1.0 + xi.gubinelli().index_axis(ndarray::Axis(0), n).iter().map(|v| v.abs()).fold(0.0, f64::max);
        if defect > 1e-12 * scale {
            return Err(invalid(format!(
                "intermediate-time semi-flow requires the compatibility ξ′_s = σ(ξ_s, ξ_(s−r)); defect {defect:.3e}"
            )));
        }
    }
    let whole = (t - s).div_ceil(n);
    if s + whole * n > drp.grid().last_index() {
        return Err(Error::HorizonExhausted { requested: s + whole * n, last: drp.grid().last_index() });
    }
    let mut prev = xi.clone();
    let mut cur = xi.clone();
    for k in 0..whole {
        prev = cur;
        cur = solver.step(&prev, drp, s + k * n)?;
    }
    if (t - s).is_multiple_of(n) {
        return Ok(cur);
    }
    // glue the tail of `prev` to the head of `cur`
    let cut = t - (cur.base_index());
    let keep = n - cut;
    let w = xi.dim();
    let d = xi.driver_dim();
    let mut values = Array2::zeros((n + 1, w));
    let mut gub = Array3::zeros((n + 1, w, d));
    values.slice_mut(s![..keep, ..]).assign(&prev.values().slice(s![cut..n, ..]));
    gub.slice_mut(s![..keep, .., ..]).assign(&prev.gubinelli().slice(s![cut..n, .., ..]));
    values.slice_mut(s![keep.., ..]).assign(&cur.values().slice(s![..=cut, ..]));
    gub.slice_mut(s![keep.., .., ..]).assign(&cur.gubinelli().slice(s![..=cut, .., ..]));
    Segment::new(t - n, xi.step(), values, gub)
}

/// The cocycle `φ(n, ω, ξ) = φ(0, n r, ω, ξ)` for `xi` on the driver's first
/// window `[−r, 0]`. The result is based at index `n · N`.
pub fn cocycle_apply(xi: &Segment, n: usize, solver: &dyn StepSolver, drp: &DelayedRoughPath) -> Result<Segment> {
    if xi.base_index() != 0 {
        return Err(invalid(format!("cocycle input must sit on the first window, got base {}", xi.base_index())));
    }
    let steps = xi.delay_steps();
    let mut cur = xi.clone();
    for k in 0..n {
        cur = solver.step(&cur, drp, (k + 1) * steps)?;
    }
    Ok(cur)
}

/// Like [`cocycle_apply`] but returns every intermediate segment
/// `φ(1, ω, ξ), …, φ(n, ω, ξ)`.
pub fn cocycle_orbit(xi: &Segment, n: usize, solver: &dyn StepSolver, drp: &DelayedRoughPath) -> Result<Vec<Segment>> {
    let steps = xi.delay_steps();
    let mut out = Vec::with_capacity(n);
    let mut cur = xi.clone();
    for k in 0..n {
        cur = solver.step(&cur, drp, (k + 1) * steps)?;
        out.push(cur.clone());
    }
    Ok(out)
}
