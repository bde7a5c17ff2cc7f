use ndarray::{Array2, Array3};

use crate::error::{invalid, Result};
use crate::grid::{SampledPath, TimeGrid};
use crate::rough::DelayedRoughPath;

/// Coarse grid and refinement factor for a fine path lifted with `delay_steps`
/// coarse steps per delay.
fn coarse_layout(fine: &SampledPath, delay_steps: usize) -> Result<(TimeGrid, usize)> {
    let fg = fine.grid();
    if delay_steps == 0 || !fg.delay_steps().is_multiple_of(delay_steps) {
        return Err(invalid(format!(
            "fine grid with {} steps per delay cannot be coarsened to {delay_steps}",
            fg.delay_steps()
        )));
    }
    let refine = fg.delay_steps() / delay_steps;
    if !fg.last_index().is_multiple_of(refine) {
        return Err(invalid("fine grid length is not a multiple of the refinement"));
    }
    let grid = TimeGrid::new(fg.t0(), fg.step() * refine as f64, delay_steps, fg.last_index() / refine + 1)?;
    Ok((grid, refine))
}

fn coarse_samples(fine: &SampledPath, refine: usize) -> Array2<f64> {
    fine.values().slice(ndarray::s![..;refine, ..]).to_owned()
}

/// Per-step areas of a fine path over coarse steps.
///
/// For each fine piece `[u_k, u_{k+1}]` inside the coarse step starting at
/// `s`, adds `(X_{s,u_k} + c·ΔX_k) ⊗ ΔX_k` to the area and
/// `(X_{s−r,u_k−r} + c·ΔX_{k−N_f}) ⊗ ΔX_k` to the delayed area. `c = 0` gives
/// left-point (Itô) sums, `c = ½` exact integrals of the linear interpolant.
fn step_areas(fine: &SampledPath, delay_steps: usize, refine: usize, c: f64) -> (Array3<f64>, Array3<f64>) {
    let v = fine.values();
    let d = fine.dim();
    let nf = delay_steps * refine;
    let steps = fine.grid().last_index() / refine;
    let mut area = Array3::zeros((steps, d, d));
    let mut delayed = Array3::zeros((steps, d, d));
    let mut rel = vec![0.0; d];
    let mut drel = vec![0.0; d];
    let mut dx = vec![0.0; d];
    for j in 0..steps {
        let s = j * refine;
        let with_history = j >= delay_steps;
        rel.fill(0.0);
        drel.fill(0.0);
        for k in s..s + refine {
            for i in 0..d {
                dx[i] = v[[k + 1, i]] - v[[k, i]];
            }
            for i in 0..d {
                let left = rel[i] + c * dx[i];
                for l in 0..d {
                    area[[j, i, l]] += left * dx[l];
                }
            }
            if with_history {
                for i in 0..d {
                    let ddx = v[[k + 1 - nf, i]] - v[[k - nf, i]];
                    let left = drel[i] + c * ddx;
                    for l in 0..d {
                        delayed[[j, i, l]] += left * dx[l];
                    }
                    drel[i] += ddx;
                }
            }
            for i in 0..d {
                rel[i] += dx[i];
            }
        }
    }
    (area, delayed)
}

/// Itô lift of a finely sampled path: per coarse step, the areas are left-point
/// Riemann sums over the fine sub-steps. With `exact_diagonal`, the diagonal
/// of each step area is replaced by `((ΔX^i)² − h)/2`.
///
/// The fine grid must carry a whole number of fine steps per coarse step and
/// start one delay before the first point with delayed data.
pub fn lift_ito_path(fine: &SampledPath, delay_steps: usize, gamma: f64, exact_diagonal: bool) -> Result<DelayedRoughPath> {
    let (grid, refine) = coarse_layout(fine, delay_steps)?;
    let x = coarse_samples(fine, refine);
    let (mut area, delayed) = step_areas(fine, delay_steps, refine, 0.0);
    if exact_diagonal {
        let h = grid.step();
        for j in 0..area.shape()[0] {
            for i in 0..fine.dim() {
                let dx = x[[j + 1, i]] - x[[j, i]];
                area[[j, i, i]] = 0.5 * (dx * dx - h);
            }
        }
    }
    DelayedRoughPath::new(grid, x, area, delayed, gamma)
}

/// Canonical lift of the piecewise-linear interpolant of `path`, integrated
/// exactly on each fine piece.
pub fn lift_piecewise_linear(path: &SampledPath, delay_steps: usize, gamma: f64) -> Result<DelayedRoughPath> {
    let (grid, refine) = coarse_layout(path, delay_steps)?;
    let x = coarse_samples(path, refine);
    let (area, delayed) = step_areas(path, delay_steps, refine, 0.5);
    DelayedRoughPath::new(grid, x, area, delayed, gamma)
}

/// `𝔹^Strat = 𝔹^Itô + ½ (t − s) I`; the delayed area is unchanged.
pub fn to_stratonovich(ito: &DelayedRoughPath) -> Result<DelayedRoughPath> {
    shift_diagonal(ito, 0.5)
}

/// Inverse of [`to_stratonovich`].
pub fn to_ito(strat: &DelayedRoughPath) -> Result<DelayedRoughPath> {
    shift_diagonal(strat, -0.5)
}

fn shift_diagonal(p: &DelayedRoughPath, factor: f64) -> Result<DelayedRoughPath> {
    let shift = factor * p.grid().step();
    let d = p.dim();
    p.map_parts(|_, area, _| {
        for mut step in area.outer_iter_mut() {
            for i in 0..d {
                step[[i, i]] += shift;
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_fine(n_fine: usize, segments: usize) -> SampledPath {
        let grid = TimeGrid::build(-1.0, 1.0 / n_fine as f64, n_fine, segments).unwrap();
        SampledPath::from_fn(grid, 1, |t| vec![t]).unwrap()
    }

    #[test]
    fn piecewise_linear_lift_of_t_is_exact() {
        let fine = linear_fine(40, 3);
        let p = lift_piecewise_linear(&fine, 10, 0.5).unwrap();
        assert_eq!(p.grid().delay_steps(), 10);
        for (s, t) in [(0, 1), (3, 17), (10, 30)] {
            let len = (t - s) as f64 * p.grid().step();
            let a = p.reconstruct_area(s, t).unwrap()[[0, 0]];
            assert!((a - len * len / 2.0).abs() < 1e-13);
        }
        let da = p.reconstruct_delayed_area(12, 25).unwrap()[[0, 0]];
        let len = 13.0 * p.grid().step();
        assert!((da - len * len / 2.0).abs() < 1e-13);
    }

    #[test]
    fn ito_lift_of_t_has_riemann_error_only() {
        let fine = linear_fine(400, 2);
        let p = lift_ito_path(&fine, 10, 0.5, false).unwrap();
        let h = p.grid().step();
        // left-point sum of ∫ u du over one coarse step: h²/2 − h·h_f/2
        let hf = h / 40.0;
        let a = p.step_area(3)[[0, 0]];
        assert!((a - (h * h / 2.0 - h * hf / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn stratonovich_round_trip() {
        let fine = linear_fine(40, 2);
        let ito = lift_ito_path(&fine, 10, 0.5, false).unwrap();
        let strat = to_stratonovich(&ito).unwrap();
        let back = to_ito(&strat).unwrap();
        let (_, _, a0, d0) = ito.raw_parts();
        let (_, _, a1, d1) = back.raw_parts();
        let (_, _, _, ds) = strat.raw_parts();
        assert!(a0.iter().zip(a1.iter()).all(|(u, v)| (u - v).abs() < 1e-15));
        assert_eq!(d0, d1);
        assert_eq!(d0, ds);
    }

    #[test]
    fn rejects_incompatible_coarsening() {
        let fine = linear_fine(40, 2);
        assert!(lift_piecewise_linear(&fine, 7, 0.5).is_err());
        assert!(lift_ito_path(&fine, 0, 0.5, false).is_err());
    }
}
