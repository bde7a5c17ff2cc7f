use ndarray::{Array2, Array3};

use super::field::SmoothDelayField;
use crate::error::{invalid, Error, Result};
use crate::grid::Segment;
use crate::rough::{add_compensated_term, ControlledPath, DelayedRoughPath};

/// Checks that `xi` is the window `[s − r, s]` on the driver's grid and that
/// `[s, s + r]` with its delayed data is available.
pub(crate) fn check_step(xi: &Segment, drp: &DelayedRoughPath, s: usize, field: &dyn SmoothDelayField) -> Result<()> {
    let n = drp.delay_steps();
    if xi.delay_steps() != n {
        return Err(invalid(format!("segment has {} steps, the driver's delay has {n}", xi.delay_steps())));
    }
    if xi.end_index() != s {
        return Err(invalid(format!("segment ends at index {}, step starts at {s}", xi.end_index())));
    }
    if (xi.step() - drp.grid().step()).abs() > 1e-12 * drp.grid().step() {
        return Err(Error::GridMismatch("segment and driver steps differ".into()));
    }
    if xi.driver_dim() != drp.dim() || field.noise_dim() != drp.dim() {
        return Err(Error::DimensionMismatch { expected: drp.dim(), found: xi.driver_dim().min(field.noise_dim()) });
    }
    if xi.dim() != field.state_dim() {
        return Err(Error::DimensionMismatch { expected: field.state_dim(), found: xi.dim() });
    }
    if s + n > drp.grid().last_index() {
        return Err(Error::HorizonExhausted { requested: s + n, last: drp.grid().last_index() });
    }
    if !drp.has_history(s) {
        return Err(Error::InsufficientHistory { index: s, needed: n, available: drp.offset() + s });
    }
    Ok(())
}

/// Scratch buffers for one compensated step.
pub(crate) struct StepWork {
    w: usize,
    d: usize,
    m: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    z0: Vec<f64>,
    z1: Vec<f64>,
    inc: Vec<f64>,
}

impl StepWork {
    pub(crate) fn new(w: usize, d: usize) -> Self {
        Self {
            w,
            d,
            m: vec![0.0; w * d],
            ds: vec![0.0; w * d * w],
            dz: vec![0.0; w * d * w],
            z0: vec![0.0; w * d * d],
            z1: vec![0.0; w * d * d],
            inc: vec![0.0; d],
        }
    }

    /// `y_next = y + Ξ` over the driver step `g → g + 1`, for the integrand
    /// `σ(ζ, z)` with `ζ′ = zeta_prime` and delayed derivative `z_prime`
    /// (both `w × d`, row-major). Returns `σ(ζ, z)` in `self.m`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn advance(
        &mut self,
        field: &dyn SmoothDelayField,
        drp: &DelayedRoughPath,
        g: usize,
        zeta: &[f64],
        zeta_prime: &[f64],
        z: &[f64],
        z_prime: &[f64],
        y: &[f64],
        y_next: &mut [f64],
    ) {
        let (w, d) = (self.w, self.d);
        field.eval(zeta, z, &mut self.m);
        field.d_state(zeta, z, &mut self.ds);
        field.d_delayed(zeta, z, &mut self.dz);
        // ζ⁰[(a,i),k] = Σ_b ∂₁σ[(a,i),b] ζ′[b,k], likewise ζ¹ with ∂₂σ and z′
        for row in 0..w * d {
            for k in 0..d {
                let (mut a0, mut a1) = (0.0, 0.0);
                for b in 0..w {
                    a0 += self.ds[row * w + b] * zeta_prime[b * d + k];
                    a1 += self.dz[row * w + b] * z_prime[b * d + k];
                }
                self.z0[row * d + k] = a0;
                self.z1[row * d + k] = a1;
            }
        }
        drp.increment_into(g, g + 1, &mut self.inc);
        y_next.copy_from_slice(y);
        add_compensated_term(
            d,
            &self.m,
            &self.z0,
            Some(&self.z1),
            &self.inc,
            drp.step_area(g),
            drp.step_delayed_area(g),
            y_next,
        );
    }

    pub(crate) fn sigma(&self) -> &[f64] {
        &self.m
    }
}

pub(crate) fn row(a: &Array2<f64>, i: usize) -> &[f64] {
    a.row(i).to_slice().expect("standard layout")
}

pub(crate) fn mat(a: &Array3<f64>, i: usize) -> &[f64] {
    a.index_axis(ndarray::Axis(0), i).to_slice().expect("standard layout")
}

/// Writes `σ(y_j, ξ_j)` into `gub[j]` for every window point.
pub(crate) fn assign_derivative(field: &dyn SmoothDelayField, y: &Array2<f64>, xi: &Segment, gub: &mut Array3<f64>) {
    let (w, d) = (field.state_dim(), field.noise_dim());
    let mut m = vec![0.0; w * d];
    for j in 0..y.nrows() {
        field.eval(row(y, j), row(xi.values(), j), &mut m);
        for a in 0..w {
            for k in 0..d {
                gub[[j, a, k]] = m[a * d + k];
            }
        }
    }
}

/// The segment as a controlled path over the driver.
pub fn segment_path(seg: &Segment, drp: &DelayedRoughPath) -> Result<ControlledPath> {
    ControlledPath::new(drp.clone(), seg.base_index(), seg.values().clone(), seg.gubinelli().clone())
}
