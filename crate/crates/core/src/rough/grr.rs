//! Garsia–Rodemich–Rumsey functionals, used as smoothness diagnostics next to
//! grid suprema.

use super::controlled::ControlledPath;
use crate::error::{invalid, Result};
use crate::grid::{euclid, HoelderParams};

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

/// Returns the pair
///
/// ```text
/// ( ∬ |ξ_u − ξ_v|^p / |u−v|^{pα+2} du dv )^{1/p},
/// ( ∬_{u<v} |ξ^#_{u,v}|^p / |u−v|^{2αp+2} du dv )^{1/p}
/// ```
///
/// over the window of `cp`, by product-trapezoid quadrature on the grid with
/// the diagonal left out. `α` is `params.alpha`.
pub fn grr_diagnostic(cp: &ControlledPath, p: f64, params: &HoelderParams) -> Result<(f64, f64)> {
    if !(p > 2.0) {
        return Err(invalid(format!("GRR exponent must exceed 2, got {p}")));
    }
    let alpha = params.alpha;
    let h = cp.driver().grid().step();
    let n = cp.len() - 1;
    let vals = cp.values();
    let d = cp.driver().dim();
    let mut inc = vec![0.0; d];
    let mut rem = vec![0.0; cp.dim()];
    let (mut es1, mut es2) = (0.0, 0.0);
    for i in 0..=n {
        for j in (i + 1)..=n {
            let w = trapezoid_weight(i, n) * trapezoid_weight(j, n) * h * h;
            let dt = (j - i) as f64 * h;
            let diff = euclid(vals.row(j).iter().zip(vals.row(i).iter()).map(|(a, b)| a - b));
            // both orderings of the symmetric integrand
            es1 += 2.0 * w * diff.powf(p) / dt.powf(p * alpha + 2.0);
            cp.remainder_into(i, j, &mut inc, &mut rem);
            es2 += w * euclid(rem.iter().copied()).powf(p) / dt.powf(2.0 * alpha * p + 2.0);
        }
    }
    Ok((es1.powf(1.0 / p), es2.powf(1.0 / p)))
}
