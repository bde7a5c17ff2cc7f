use ndarray::{Array2, Array3, ArrayView2};

use super::path::DelayedRoughPath;
use crate::error::{invalid, Error, Result};
use crate::grid::{euclid, pairwise_seminorm, rows_seminorm, HoelderParams, SampledPath};

fn flatten(a: &Array3<f64>) -> ArrayView2<'_, f64> {
    let (n, p, q) = a.dim();
    a.view().into_shape_with_order((n, p * q)).expect("standard layout")
}

fn check_window(driver: &DelayedRoughPath, start: usize, len: usize) -> Result<()> {
    if len < 2 {
        return Err(invalid("controlled paths need at least 2 points"));
    }
    let end = start + len - 1;
    if end > driver.grid().last_index() {
        return Err(Error::HorizonExhausted { requested: end, last: driver.grid().last_index() });
    }
    Ok(())
}

/// A path `m` controlled by `X` with Gubinelli derivative `m′`:
/// `m_{s,t} = m′_s X_{s,t} + m^#_{s,t}`.
///
/// Values are `w`-vectors, derivatives `w × d` matrices; the path lives on the
/// driver indices `start ..= start + len − 1`.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    driver: DelayedRoughPath,
    start: usize,
    values: Array2<f64>,
    gubinelli: Array3<f64>,
}

impl ControlledPath {
    pub fn new(driver: DelayedRoughPath, start: usize, values: Array2<f64>, gubinelli: Array3<f64>) -> Result<Self> {
        check_window(&driver, start, values.nrows())?;
        let expect = [values.nrows(), values.ncols(), driver.dim()];
        if gubinelli.shape() != expect {
            return Err(invalid(format!(
                "Gubinelli derivative must have shape {expect:?}, got {:?}",
                gubinelli.shape()
            )));
        }
        Ok(Self { driver, start, values, gubinelli })
    }

    /// The path `X` itself on `[start, end]` with `m′ = Id`.
    pub fn driver_itself(driver: &DelayedRoughPath, start: usize, end: usize) -> Result<Self> {
        if end < start || end >= driver.n_points() {
            return Err(invalid(format!("window [{start}, {end}] outside the driver grid")));
        }
        let d = driver.dim();
        let len = end + 1 - start;
        let values = Array2::from_shape_fn((len, d), |(i, k)| driver.x(start + i)[k]);
        let gub = Array3::from_shape_fn((len, d, d), |(_, a, k)| if a == k { 1.0 } else { 0.0 });
        Self::new(driver.clone(), start, values, gub)
    }

    pub fn driver(&self) -> &DelayedRoughPath {
        &self.driver
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.values.nrows() - 1
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn gubinelli(&self) -> &Array3<f64> {
        &self.gubinelli
    }

    pub fn into_parts(self) -> (Array2<f64>, Array3<f64>) {
        (self.values, self.gubinelli)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            driver: self.driver.clone(),
            start: self.start,
            values: &self.values * factor,
            gubinelli: &self.gubinelli * factor,
        }
    }

    /// Values as a sampled path on the corresponding piece of the driver grid.
    pub fn values_path(&self) -> Result<SampledPath> {
        let g = self.driver.grid();
        let grid = crate::grid::TimeGrid::new(g.time(self.start), g.step(), g.delay_steps(), self.len())?;
        SampledPath::new(grid, self.values.clone())
    }

    /// `m^#_{t_i, t_j}` for local indices `i ≤ j`, written into `out`.
    pub fn remainder_into(&self, i: usize, j: usize, inc: &mut [f64], out: &mut [f64]) {
        let d = self.driver.dim();
        self.driver.increment_into(self.start + i, self.start + j, inc);
        let g = &self.gubinelli;
        for (a, o) in out.iter_mut().enumerate() {
            let mut v = self.values[[j, a]] - self.values[[i, a]];
            for k in 0..d {
                v -= g[[i, a, k]] * inc[k];
            }
            *o = v;
        }
    }

    pub fn remainder(&self, i: usize, j: usize) -> Vec<f64> {
        let mut inc = vec![0.0; self.driver.dim()];
        let mut out = vec![0.0; self.dim()];
        self.remainder_into(i, j, &mut inc, &mut out);
        out
    }

    pub fn remainder_seminorm(&self, exponent: f64) -> f64 {
        let mut inc = vec![0.0; self.driver.dim()];
        let mut out = vec![0.0; self.dim()];
        pairwise_seminorm(self.driver.grid().step(), 0, self.len() - 1, exponent, |i, j| {
            self.remainder_into(i, j, &mut inc, &mut out);
            euclid(out.iter().copied())
        })
        .expect("window has at least 2 points")
    }

    pub fn derivative_seminorm(&self, exponent: f64) -> f64 {
        rows_seminorm(flatten(&self.gubinelli), self.driver.grid().step(), exponent, 0, self.len() - 1)
    }

    /// `|m_a| + |m′_a| + ‖m′‖_θ + ‖m^#‖_{2θ}` on the grid.
    pub fn norm_with_exponent(&self, exponent: f64) -> f64 {
        let m_a = euclid(self.values.row(0).iter().copied());
        let d_a = euclid(self.gubinelli.index_axis(ndarray::Axis(0), 0).iter().copied());
        m_a + d_a + self.derivative_seminorm(exponent) + self.remainder_seminorm(2.0 * exponent)
    }

    /// Plain rough integral `∫ m d𝐗` using only `𝕏` in the compensation;
    /// `m` must have `w·d` components (row-major `w × d` matrices).
    pub fn integrate(&self, a: usize, b: usize) -> Result<ControlledPath> {
        let d = self.driver.dim();
        let v = self.dim();
        if !v.is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d * (v / d + 1), found: v });
        }
        if a < self.start || b > self.end() || a >= b {
            return Err(invalid(format!("integration window [{a}, {b}] outside [{}, {}]", self.start, self.end())));
        }
        let w = v / d;
        let len = b - a + 1;
        let mut y = Array2::zeros((len, w));
        let mut inc = vec![0.0; d];
        for step in 0..len - 1 {
            let j = a + step;
            let li = j - self.start;
            self.driver.increment_into(j, j + 1, &mut inc);
            let area = self.driver.step_area(j);
            for c in 0..w {
                let mut acc = 0.0;
                for i in 0..d {
                    acc += self.values[[li, c * d + i]] * inc[i];
                    for k in 0..d {
                        acc += self.gubinelli[[li, c * d + i, k]] * area[[k, i]];
                    }
                }
                y[[step + 1, c]] = y[[step, c]] + acc;
            }
        }
        let gub = Array3::from_shape_fn((len, w, d), |(i, c, k)| self.values[[a - self.start + i, c * d + k]]);
        ControlledPath::new(self.driver.clone(), a, y, gub)
    }
}

/// A path controlled jointly by `X` and its delayed copy:
/// `m_{s,t} = ζ⁰_s X_{s,t} + ζ¹_s X_{s−r,t−r} + m^#_{s,t}`.
#[derive(Debug, Clone)]
pub struct DelayedControlledPath {
    driver: DelayedRoughPath,
    start: usize,
    values: Array2<f64>,
    zeta0: Array3<f64>,
    zeta1: Array3<f64>,
}

impl DelayedControlledPath {
    pub fn new(
        driver: DelayedRoughPath,
        start: usize,
        values: Array2<f64>,
        zeta0: Array3<f64>,
        zeta1: Array3<f64>,
    ) -> Result<Self> {
        check_window(&driver, start, values.nrows())?;
        driver.check_history(start)?;
        let expect = [values.nrows(), values.ncols(), driver.dim()];
        for z in [&zeta0, &zeta1] {
            if z.shape() != expect {
                return Err(invalid(format!("derivatives must have shape {expect:?}, got {:?}", z.shape())));
            }
        }
        Ok(Self { driver, start, values, zeta0, zeta1 })
    }

    pub fn driver(&self) -> &DelayedRoughPath {
        &self.driver
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.values.nrows() - 1
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn zeta0(&self) -> &Array3<f64> {
        &self.zeta0
    }

    pub fn zeta1(&self) -> &Array3<f64> {
        &self.zeta1
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            driver: self.driver.clone(),
            start: self.start,
            values: &self.values * factor,
            zeta0: &self.zeta0 * factor,
            zeta1: &self.zeta1 * factor,
        }
    }

    pub fn remainder_into(&self, i: usize, j: usize, inc: &mut [f64], dinc: &mut [f64], out: &mut [f64]) {
        let d = self.driver.dim();
        let n = self.driver.delay_steps();
        let (s, t) = (self.start + i, self.start + j);
        self.driver.increment_into(s, t, inc);
        // history is guaranteed by construction
        let off = self.driver.offset();
        let (_, x, _, _) = self.driver.raw_parts();
        for k in 0..d {
            dinc[k] = x[[off + t - n, k]] - x[[off + s - n, k]];
        }
        for (a, o) in out.iter_mut().enumerate() {
            let mut v = self.values[[j, a]] - self.values[[i, a]];
            for k in 0..d {
                v -= self.zeta0[[i, a, k]] * inc[k] + self.zeta1[[i, a, k]] * dinc[k];
            }
            *o = v;
        }
    }

    pub fn remainder(&self, i: usize, j: usize) -> Vec<f64> {
        let d = self.driver.dim();
        let (mut inc, mut dinc) = (vec![0.0; d], vec![0.0; d]);
        let mut out = vec![0.0; self.dim()];
        self.remainder_into(i, j, &mut inc, &mut dinc, &mut out);
        out
    }

    pub fn remainder_seminorm(&self, exponent: f64) -> f64 {
        let d = self.driver.dim();
        let (mut inc, mut dinc) = (vec![0.0; d], vec![0.0; d]);
        let mut out = vec![0.0; self.dim()];
        pairwise_seminorm(self.driver.grid().step(), 0, self.len() - 1, exponent, |i, j| {
            self.remainder_into(i, j, &mut inc, &mut dinc, &mut out);
            euclid(out.iter().copied())
        })
        .expect("window has at least 2 points")
    }

    /// `|m_a| + |ζ⁰_a| + |ζ¹_a| + ‖ζ⁰‖_θ + ‖ζ¹‖_θ + ‖m^#‖_{2θ}` on the grid.
    pub fn norm_with_exponent(&self, exponent: f64) -> f64 {
        let h = self.driver.grid().step();
        let hi = self.len() - 1;
        let at0 = |z: &Array3<f64>| euclid(z.index_axis(ndarray::Axis(0), 0).iter().copied());
        euclid(self.values.row(0).iter().copied())
            + at0(&self.zeta0)
            + at0(&self.zeta1)
            + rows_seminorm(flatten(&self.zeta0), h, exponent, 0, hi)
            + rows_seminorm(flatten(&self.zeta1), h, exponent, 0, hi)
            + self.remainder_seminorm(2.0 * exponent)
    }
}

/// A plain controlled path seen as a delayed one (`ζ⁰ = m′`, `ζ¹ = 0`).
pub fn promote(cp: &ControlledPath) -> Result<DelayedControlledPath> {
    let zeta1 = Array3::zeros(cp.gubinelli.raw_dim());
    DelayedControlledPath::new(cp.driver.clone(), cp.start, cp.values.clone(), cp.gubinelli.clone(), zeta1)
}

/// Norms on the two kinds of controlled path, at the solution exponent `β`.
pub trait ControlledNorm {
    fn controlled_norm(&self, params: &HoelderParams) -> f64;
}

impl ControlledNorm for ControlledPath {
    fn controlled_norm(&self, params: &HoelderParams) -> f64 {
        self.norm_with_exponent(params.beta)
    }
}

impl ControlledNorm for DelayedControlledPath {
    fn controlled_norm(&self, params: &HoelderParams) -> f64 {
        self.norm_with_exponent(params.beta)
    }
}

pub fn controlled_norm(cp: &impl ControlledNorm, params: &HoelderParams) -> f64 {
    cp.controlled_norm(params)
}

/// `d_{2β}((m, m′), (m̃, m̃′)) = ‖m′ − m̃′‖_β + ‖m^# − m̃^#‖_{2β}`.
///
/// The two paths may be controlled by different drivers; each remainder is
/// taken against its own driver.
pub fn d2beta_distance(x: &ControlledPath, y: &ControlledPath, params: &HoelderParams) -> Result<f64> {
    d2beta_parts(x, y, params.beta).map(|(a, b)| a + b)
}

/// The derivative and remainder terms of [`d2beta_distance`] at exponent `beta`.
pub fn d2beta_parts(x: &ControlledPath, y: &ControlledPath, beta: f64) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.dim() != y.dim() || x.driver.dim() != y.driver.dim() {
        return Err(invalid(format!(
            "window mismatch: {}x{} vs {}x{}",
            x.len(),
            x.dim(),
            y.len(),
            y.dim()
        )));
    }
    let h = x.driver.grid().step();
    if (h - y.driver.grid().step()).abs() > 1e-15 * h {
        return Err(Error::GridMismatch("controlled paths live on grids with different steps".into()));
    }
    let gdiff = &x.gubinelli - &y.gubinelli;
    let deriv = rows_seminorm(flatten(&gdiff), h, beta, 0, x.len() - 1);
    let d = x.driver.dim();
    let (mut i1, mut i2) = (vec![0.0; d], vec![0.0; d]);
    let (mut r1, mut r2) = (vec![0.0; x.dim()], vec![0.0; x.dim()]);
    let rem = pairwise_seminorm(h, 0, x.len() - 1, 2.0 * beta, |i, j| {
        x.remainder_into(i, j, &mut i1, &mut r1);
        y.remainder_into(i, j, &mut i2, &mut r2);
        euclid(r1.iter().zip(&r2).map(|(a, b)| a - b))
    })?;
    Ok((deriv, rem))
}
