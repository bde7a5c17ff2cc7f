use super::path::{AreaFold, DelayedRoughPath};
use crate::error::{invalid, Result};
use crate::grid::{euclid, inverse_powers};

/// The three grid seminorms `(‖X‖_γ, ‖𝕏‖_{2γ}, ‖𝕏(−r)‖_{2γ})` of `a − b`
/// (or of `a` alone when `b` is `None`) over the index window `[lo, hi]`.
/// `lo` must have one delay of history.
pub fn seminorm_terms(
    a: &DelayedRoughPath,
    b: Option<&DelayedRoughPath>,
    gamma: f64,
    lo: usize,
    hi: usize,
) -> Result<[f64; 3]> {
    if let Some(b) = b {
        a.same_grid(b)?;
        b.check_history(lo)?;
    }
    if lo >= hi {
        return Err(invalid(format!("empty index range [{lo}, {hi}]")));
    }
    a.check_pair(lo, hi)?;
    a.check_history(lo)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("exponent must lie in (0, 1], got {gamma}")));
    }
    let h = a.grid().step();
    let p1 = inverse_powers(h, gamma, hi - lo);
    let p2 = inverse_powers(h, 2.0 * gamma, hi - lo);
    let d = a.dim();
    let mut out = [0.0_f64; 3];
    let mut tmp = vec![0.0; d * d];
    for s in lo..hi {
        let mut fa = AreaFold::new(a, s, true);
        let mut fb = b.map(|b| AreaFold::new(b, s, true));
        for t in (s + 1)..=hi {
            fa.advance();
            if let Some(fb) = fb.as_mut() {
                fb.advance();
            }
            let lag = t - s;
            let path = match &fb {
                Some(fb) => euclid(fa.increment().iter().zip(fb.increment()).map(|(x, y)| x - y)),
                None => euclid(fa.increment().iter().copied()),
            };
            out[0] = out[0].max(path * p1[lag]);
            for (slot, delayed) in [(1usize, false), (2, true)] {
                let av = if delayed { fa.delayed_area() } else { fa.area() };
                match &fb {
                    Some(fb) => {
                        let bv = if delayed { fb.delayed_area() } else { fb.area() };
                        for (k, (x, y)) in av.iter().zip(bv.iter()).enumerate() {
                            tmp[k] = x - y;
                        }
                    }
                    None => {
                        for (k, x) in av.iter().enumerate() {
                            tmp[k] = *x;
                        }
                    }
                }
                out[slot] = out[slot].max(euclid(tmp.iter().copied()) * p2[lag]);
            }
        }
    }
    Ok(out)
}

/// First index of a path view whose delayed quantities are available.
pub fn first_index_with_history(p: &DelayedRoughPath) -> usize {
    p.delay_steps().saturating_sub(p.offset())
}

/// Inhomogeneous distance `ϱ_γ(𝐗, 𝐘)` on `[lo, hi]`.
pub fn rho_distance_on(a: &DelayedRoughPath, b: &DelayedRoughPath, gamma: f64, lo: usize, hi: usize) -> Result<f64> {
    let [p, x, dx] = seminorm_terms(a, Some(b), gamma, lo, hi)?;
    Ok(p + x + dx)
}

/// `ϱ_γ(𝐗, 𝐘)` over every grid point of the view with available history.
pub fn rho_distance(a: &DelayedRoughPath, b: &DelayedRoughPath, gamma: f64) -> Result<f64> {
    let lo = first_index_with_history(a);
    rho_distance_on(a, b, gamma, lo, a.grid().last_index())
}

/// `(‖X‖_γ, ‖𝕏‖_{2γ}, ‖𝕏(−r)‖_{2γ})` of a single path on `[lo, hi]`.
pub fn rough_path_norms(p: &DelayedRoughPath, gamma: f64, lo: usize, hi: usize) -> Result<[f64; 3]> {
    seminorm_terms(p, None, gamma, lo, hi)
}
