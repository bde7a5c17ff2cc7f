use ndarray::{Array2, Array3, ArrayView2};

use super::controlled::{ControlledPath, DelayedControlledPath};
use super::path::DelayedRoughPath;
use crate::error::{invalid, Error, Result};

/// Adds the compensated increment
/// `m X_{s,t} + ζ⁰ 𝕏_{s,t} + ζ¹ 𝕏_{s,t}(−r)` to `out`.
///
/// `m` is a row-major `w × d` matrix; `zeta0`/`zeta1` are `(w·d) × d` row-major,
/// `ζ[(a,i), k]` being the sensitivity of `m_{a,i}` to the `k`-th driver
/// component. `area`/`delayed_area` follow `𝕏^{ki} = ∫ X^k dX^i`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_compensated_term(
    d: usize,
    m: &[f64],
    zeta0: &[f64],
    zeta1: Option<&[f64]>,
    inc: &[f64],
    area: ArrayView2<'_, f64>,
    delayed_area: ArrayView2<'_, f64>,
    out: &mut [f64],
) {
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..d {
            let row = a * d + i;
            acc += m[row] * inc[i];
            for k in 0..d {
                acc += zeta0[row * d + k] * area[[k, i]];
            }
            if let Some(z1) = zeta1 {
                for k in 0..d {
                    acc += z1[row * d + k] * delayed_area[[k, i]];
                }
            }
        }
        *o += acc;
    }
}

/// `t ↦ ∫_a^t m d𝐗` on the grid indices `a ..= b`, evaluated as the telescoped
/// compensated sum over consecutive grid steps.
///
/// `m` must take values in `L(ℝ^d, ℝ^w)`, stored as `w·d` components. The
/// result starts at zero and has Gubinelli derivative `m` itself.
pub fn delayed_rough_integral(m: &DelayedControlledPath, a: usize, b: usize) -> Result<ControlledPath> {
    let drv = m.driver();
    let d = drv.dim();
    let v = m.dim();
    if !v.is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: (v / d + 1) * d, found: v });
    }
    if a >= b || a < m.start() || b > m.end() {
        return Err(invalid(format!(
            "integration window [{a}, {b}] must lie inside the integrand window [{}, {}]",
            m.start(),
            m.end()
        )));
    }
    drv.check_history(a)?;
    let w = v / d;
    let len = b - a + 1;
    let mut y = Array2::<f64>::zeros((len, w));
    let mut inc = vec![0.0; d];
    let mut acc = vec![0.0; w];
    let z0 = m.zeta0();
    let z1 = m.zeta1();
    let vals = m.values();
    for step in 0..len - 1 {
        let j = a + step;
        let li = j - m.start();
        drv.increment_into(j, j + 1, &mut inc);
        acc.iter_mut().enumerate().for_each(|(c, o)| *o = y[[step, c]]);
        add_compensated_term(
            d,
            vals.row(li).as_slice().expect("standard layout"),
            z0.index_axis(ndarray::Axis(0), li).as_slice().expect("standard layout"),
            Some(z1.index_axis(ndarray::Axis(0), li).as_slice().expect("standard layout")),
            &inc,
            drv.step_area(j),
            drv.step_delayed_area(j),
            &mut acc,
        );
        for c in 0..w {
            y[[step + 1, c]] = acc[c];
        }
    }
    let off = a - m.start();
    let gub = Array3::from_shape_fn((len, w, d), |(i, c, k)| vals[[off + i, c * d + k]]);
    ControlledPath::new(drv.clone(), a, y, gub)
}

/// The one-step germ `Ξ_{s,t} = m_s X_{s,t} + ζ⁰_s 𝕏_{s,t} + ζ¹_s 𝕏_{s,t}(−r)`
/// over an arbitrary grid interval, with areas rebuilt by Chen.
pub fn compensated_germ(m: &DelayedControlledPath, s: usize, t: usize) -> Result<Vec<f64>> {
    let drv: &DelayedRoughPath = m.driver();
    let d = drv.dim();
    if s < m.start() || t > m.end() || s > t {
        return Err(invalid(format!("germ interval [{s}, {t}] outside the integrand window")));
    }
    let li = s - m.start();
    let area = drv.reconstruct_area(s, t)?;
    let darea = drv.reconstruct_delayed_area(s, t)?;
    let inc = drv.increment(s, t);
    let mut out = vec![0.0; m.dim() / d];
    add_compensated_term(
        d,
        m.values().row(li).as_slice().expect("standard layout"),
        m.zeta0().index_axis(ndarray::Axis(0), li).as_slice().expect("standard layout"),
        Some(m.zeta1().index_axis(ndarray::Axis(0), li).as_slice().expect("standard layout")),
        &inc,
        area.view(),
        darea.view(),
        &mut out,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::controlled::promote;
    use crate::rough::path::random_path;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_integrand_gives_scaled_increment() {
        let p = random_path(11, 2, 5, 3);
        let (a, b) = (5, 15);
        let len = b - a + 1;
        // w = 1, m = (c1, c2) as a 1×2 matrix
        let c = [0.7, -1.3];
        let vals = Array2::from_shape_fn((len, 2), |(_, k)| c[k]);
        let m = DelayedControlledPath::new(p.clone(), a, vals, Array3::zeros((len, 2, 2)), Array3::zeros((len, 2, 2)))
            .unwrap();
        let y = delayed_rough_integral(&m, a, b).unwrap();
        for t in a..=b {
            let inc = p.increment(a, t);
            let expected = c[0] * inc[0] + c[1] * inc[1];
            assert!((y.values()[[t - a, 0]] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn integral_of_x_against_itself_is_area() {
        // scalar: m = X, ζ⁰ = 1 gives 𝕏_{a,t} + X_a X_{a,t}
        let p = random_path(12, 1, 5, 4);
        let (a, b) = (6, 17);
        let cp = ControlledPath::driver_itself(&p, a, b).unwrap();
        let y = delayed_rough_integral(&promote(&cp).unwrap(), a, b).unwrap();
        for t in a..=b {
            let expected = p.reconstruct_area(a, t).unwrap()[[0, 0]] + p.x(a)[0] * p.increment(a, t)[0];
            assert!((y.values()[[t - a, 0]] - expected).abs() < 1e-12);
        }
        assert_eq!(y.gubinelli()[[3, 0, 0]], p.x(a + 3)[0]);
    }

    #[test]
    fn integral_of_x_against_itself_two_dim() {
        // W = ℝ^{2×2}: m_u(v) = X_u ⊗ v, so ∫ m d𝐗 = 𝕏_{a,t} + X_a ⊗ X_{a,t}
        let p = random_path(13, 2, 4, 3);
        let (a, b) = (4, 12);
        let len = b - a + 1;
        // value index (c, i) with c = (p, q) flattened: m[(p,q), i] = X^p δ_{q i}
        let vals = Array2::from_shape_fn((len, 8), |(l, idx)| {
            let (c, i) = (idx / 2, idx % 2);
            let (pp, q) = (c / 2, c % 2);
            if q == i { p.x(a + l)[pp] } else { 0.0 }
        });
        let z0 = Array3::from_shape_fn((len, 8, 2), |(_, idx, k)| {
            let (c, i) = (idx / 2, idx % 2);
            let (pp, q) = (c / 2, c % 2);
            if q == i && pp == k { 1.0 } else { 0.0 }
        });
        let m = DelayedControlledPath::new(p.clone(), a, vals, z0, Array3::zeros((len, 8, 2))).unwrap();
        let y = delayed_rough_integral(&m, a, b).unwrap();
        for t in a..=b {
            let area = p.reconstruct_area(a, t).unwrap();
            let inc = p.increment(a, t);
            for pp in 0..2 {
                for q in 0..2 {
                    let expected = area[[pp, q]] + p.x(a)[pp] * inc[q];
                    assert!((y.values()[[t - a, pp * 2 + q]] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn integral_of_delayed_driver_is_delayed_area() {
        // m_u = X_{u−r}, ζ⁰ = 0, ζ¹ = 1 gives 𝕏_{a,t}(−r) + X_{a−r} X_{a,t}
        let p = random_path(14, 1, 5, 4);
        let n = p.delay_steps();
        let (a, b) = (7, 18);
        let len = b - a + 1;
        let vals = Array2::from_shape_fn((len, 1), |(l, _)| p.x(a + l - n)[0]);
        let m = DelayedControlledPath::new(p.clone(), a, vals, Array3::zeros((len, 1, 1)), Array3::ones((len, 1, 1)))
            .unwrap();
        let y = delayed_rough_integral(&m, a, b).unwrap();
        for t in a..=b {
            let expected = p.reconstruct_delayed_area(a, t).unwrap()[[0, 0]] + p.x(a - n)[0] * p.increment(a, t)[0];
            assert!((y.values()[[t - a, 0]] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn additivity_over_adjacent_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let p = random_path(100 + trial, 2, 6, 6);
            let (a, c) = (6, 30);
            let b = rng.random_range(a + 1..c);
            let len = c - a + 1;
            let vals = Array2::from_shape_fn((len, 4), |_| rng.random_range(-1.0..1.0));
            let z0 = Array3::from_shape_fn((len, 4, 2), |_| rng.random_range(-1.0..1.0));
            let z1 = Array3::from_shape_fn((len, 4, 2), |_| rng.random_range(-1.0..1.0));
            let m = DelayedControlledPath::new(p.clone(), a, vals, z0, z1).unwrap();
            let full = delayed_rough_integral(&m, a, c).unwrap();
            let left = delayed_rough_integral(&m, a, b).unwrap();
            let right = delayed_rough_integral(&m, b, c).unwrap();
            for comp in 0..2 {
                let sum = left.values()[[b - a, comp]] + right.values()[[c - b, comp]];
                let whole = full.values()[[c - a, comp]];
                assert!((sum - whole).abs() <= 1e-12 * (1.0 + whole.abs()));
            }
        }
    }

    #[test]
    fn promote_then_integrate_matches_plain_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = random_path(15, 2, 5, 5);
        let (a, b) = (5, 22);
        let len = b - a + 1;
        let vals = Array2::from_shape_fn((len, 6), |_| rng.random_range(-1.0..1.0));
        let gub = Array3::from_shape_fn((len, 6, 2), |_| rng.random_range(-1.0..1.0));
        let cp = ControlledPath::new(p.clone(), a, vals, gub).unwrap();
        let plain = cp.integrate(a, b).unwrap();
        let delayed = delayed_rough_integral(&promote(&cp).unwrap(), a, b).unwrap();
        let diff = (plain.values() - delayed.values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-13);
        assert_eq!(plain.gubinelli(), delayed.gubinelli());
    }

    #[test]
    fn integral_errors() {
        let p = random_path(16, 2, 5, 3);
        let m = DelayedControlledPath::new(p.clone(), 5, Array2::zeros((6, 3)), Array3::zeros((6, 3, 2)), Array3::zeros((6, 3, 2)))
            .unwrap();
        assert!(matches!(delayed_rough_integral(&m, 5, 10), Err(Error::DimensionMismatch { .. })));
        let m = DelayedControlledPath::new(p, 5, Array2::zeros((6, 2)), Array3::zeros((6, 2, 2)), Array3::zeros((6, 2, 2)))
            .unwrap();
        assert!(delayed_rough_integral(&m, 5, 11).is_err());
    }
}
