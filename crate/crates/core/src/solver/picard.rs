use ndarray::{s, Array2, Array3};
use serde::{Deserialize, Serialize};

use super::field::SmoothDelayField;
use super::step::{assign_derivative, check_step, mat, row, StepWork};
use crate::error::{invalid, Error, Result};
use crate::grid::Segment;
use crate::rough::{d2beta_parts, rough_path_norms, ControlledPath, DelayedRoughPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub max_iterations: usize,
    /// Iteration stops once successive iterates are this close in `d_{2β}`.
    pub tolerance: f64,
    /// Smallest sub-window, in grid steps, before giving up.
    pub min_window: usize,
    /// Exponent of the `d_{2β}` distance.
    pub beta: f64,
    /// Largest accepted ratio of successive gaps.
    pub contraction_limit: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-12, min_window: 1, beta: 0.45, contraction_limit: 0.9 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("fixed-point tolerance must be positive"));
        }
        if self.max_iterations == 0 || self.min_window == 0 {
            return Err(invalid("max_iterations and min_window must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(invalid(format!("beta must lie in (0, 1/2], got {}", self.beta)));
        }
        if !(self.contraction_limit > 0.0 && self.contraction_limit < 1.0) {
            return Err(invalid("contraction limit must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// What happened on one accepted sub-window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    /// Local indices `[start, end]` within the step.
    pub start: usize,
    pub end: usize,
    /// `d_{2β}` gaps between successive iterates.
    pub gaps: Vec<f64>,
    /// How often the window was halved before it was accepted.
    pub halvings: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PicardReport {
    pub windows: Vec<WindowReport>,
}

impl PicardReport {
    pub fn iterations(&self) -> usize {
        self.windows.iter().map(|w| w.gaps.len()).sum()
    }
}

struct Window<'a> {
    field: &'a dyn SmoothDelayField,
    xi: &'a Segment,
    drp: &'a DelayedRoughPath,
    s: usize,
    a: usize,
    b: usize,
}

impl Window<'_> {
    /// One application of `ζ ↦ y_a + ∫ σ(ζ_u, ξ_{u−r}) d𝐗` on `[a, b]`.
    fn map(&self, zeta: &Array2<f64>, zp: &Array3<f64>, work: &mut StepWork) -> (Array2<f64>, Array3<f64>) {
        let (w, d) = (self.field.state_dim(), self.field.noise_dim());
        let len = self.b - self.a + 1;
        let mut y = Array2::zeros((len, w));
        let mut gub = Array3::zeros((len, w, d));
        y.row_mut(0).assign(&zeta.row(0));
        let mut next = vec![0.0; w];
        for l in 0..len {
            let j = self.a + l;
            let z = row(self.xi.values(), j);
            if l + 1 < len {
                work.advance(
                    self.field,
                    self.drp,
                    self.s + j,
                    row(zeta, l),
                    mat(zp, l),
                    z,
                    mat(self.xi.gubinelli(), j),
                    row(&y, l),
                    &mut next,
                );
                for c in 0..w {
                    y[[l + 1, c]] = next[c];
                }
            } else {
                let mut m = vec![0.0; w * d];
                self.field.eval(row(zeta, l), z, &mut m);
                work_copy(&m, &mut gub, l, w, d);
                continue;
            }
            work_copy(work.sigma(), &mut gub, l, w, d);
        }
        (y, gub)
    }

    fn gap(&self, a: (&Array2<f64>, &Array3<f64>), b: (&Array2<f64>, &Array3<f64>), beta: f64) -> Result<f64> {
        let start = self.s + self.a;
        let x = ControlledPath::new(self.drp.clone(), start, a.0.clone(), a.1.clone())?;
        let y = ControlledPath::new(self.drp.clone(), start, b.0.clone(), b.1.clone())?;
        let (deriv, rem) = d2beta_parts(&x, &y, beta)?;
        Ok(deriv + rem)
    }
}

fn work_copy(m: &[f64], gub: &mut Array3<f64>, l: usize, w: usize, d: usize) {
    for a in 0..w {
        for k in 0..d {
            gub[[l, a, k]] = m[a * d + k];
        }
    }
}

/// [`solve_nonlinear_step`] together with the per-window iteration record.
pub fn solve_nonlinear_step_with_report(
    xi: &Segment,
    field: &dyn SmoothDelayField,
    drp: &DelayedRoughPath,
    s: usize,
    fp: &FixedPointConfig,
) -> Result<(Segment, PicardReport)> {
    fp.validate()?;
    check_step(xi, drp, s, field)?;
    let n = xi.delay_steps();
    let (w, d) = (field.state_dim(), field.noise_dim());
    let mut y = Array2::zeros((n + 1, w));
    y.row_mut(0).assign(&xi.right_value());
    let mut report = PicardReport::default();
    let mut work = StepWork::new(w, d);
    let mut window = n;
    let mut a = 0;
    while a < n {
        let mut halvings = 0;
        loop {
            let b = (a + window).min(n);
            let win = Window { field, xi, drp, s, a, b };
            let len = b - a + 1;
            // initial guess: the constant path y_a with derivative σ(y_a, ξ_a)
            let mut zeta = Array2::zeros((len, w));
            for mut r in zeta.rows_mut() {
                r.assign(&y.row(a));
            }
            let mut m = vec![0.0; w * d];
            field.eval(row(&y, a), row(xi.values(), a), &mut m);
            let mut zp = Array3::zeros((len, w, d));
            for l in 0..len {
                work_copy(&m, &mut zp, l, w, d);
            }
            let mut gaps = Vec::new();
            let mut accepted = None;
            for _ in 0..fp.max_iterations {
                let (ny, ng) = win.map(&zeta, &zp, &mut work);
                let gap = win.gap((&ny, &ng), (&zeta, &zp), fp.beta)?;
                gaps.push(gap);
                zeta = ny;
                zp = ng;
                if gap <= fp.tolerance {
                    accepted = Some(zeta.clone());
                    break;
                }
                let k = gaps.len();
                if k >= 2 && gaps[k - 1] > fp.contraction_limit * gaps[k - 2] {
                    break;
                }
            }
            if let Some(sol) = accepted {
                y.slice_mut(s![a..=b, ..]).assign(&sol);
                report.windows.push(WindowReport { start: a, end: b, gaps, halvings });
                a = b;
                break;
            }
            let factor = match gaps.len() {
                0 | 1 => f64::INFINITY,
                k => gaps[k - 1] / gaps[k - 2],
            };
            if window / 2 < fp.min_window {
                let norms = rough_path_norms(drp, drp.gamma(), s, s + n)?;
                return Err(Error::ConvergenceFailure {
                    window,
                    factor,
                    driver_norms: norms,
                    field_bound: field.bounds().first,
                });
            }
            window /= 2;
            halvings += 1;
        }
    }
    let mut gub = Array3::zeros((n + 1, w, d));
    assign_derivative(field, &y, xi, &mut gub);
    Ok((Segment::new(s, xi.step(), y, gub)?, report))
}

/// Solution segment on `[s, s + r]` of `dy = σ(y_t, y_{t−r}) d𝐗` by Picard
/// iteration on sub-windows, halving a window whenever the ratio of successive
/// `d_{2β}` gaps (after the first iteration) exceeds the contraction limit.
pub fn solve_nonlinear_step(
    xi: &Segment,
    field: &dyn SmoothDelayField,
    drp: &DelayedRoughPath,
    s: usize,
    fp: &FixedPointConfig,
) -> Result<Segment> {
    solve_nonlinear_step_with_report(xi, field, drp, s, fp).map(|(seg, _)| seg)
}
