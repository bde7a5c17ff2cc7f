//! Uniform time grids aligned to the delay, sampled paths and segments, and
//! grid estimators for Hölder-type seminorms and the M2 norm.
//!
//! All suprema are taken over every grid pair `s < t` of the chosen index
//! window, so they are lower bounds of the continuous-time quantities. The
//! grid step is part of every type here and should be reported next to any
//! norm value.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A uniform grid `t0 + i·h`, `0 ≤ i < n_points`, with the delay `r = delay_steps · h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    h: f64,
    n_points: usize,
    delay_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, h: f64, delay_steps: usize, n_points: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("grid step must be positive and finite, got {h}")));
        }
        if !t0.is_finite() {
            return Err(invalid("grid origin must be finite"));
        }
        if n_points < 2 {
            return Err(invalid(format!("a grid needs at least 2 points, got {n_points}")));
        }
        if delay_steps == 0 {
            return Err(invalid("delay_steps must be at least 1"));
        }
        Ok(Self { t0, h, n_points, delay_steps })
    }

    /// Grid spanning `[t0, t0 + segments·r]` with `segments·delay_steps + 1` points.
    pub fn build(t0: f64, h: f64, delay_steps: usize, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(invalid("segments must be at least 1"));
        }
        if delay_steps == 0 {
            return Err(invalid("delay_steps must be at least 1"));
        }
        Self::new(t0, h, delay_steps, segments * delay_steps + 1)
    }

    /// Same as [`TimeGrid::build`] with the step derived from a requested delay.
    /// The grid's delay is then `delay_steps · (r / delay_steps)`.
    pub fn with_delay(t0: f64, r: f64, delay_steps: usize, segments: usize) -> Result<Self> {
        if delay_steps == 0 {
            return Err(invalid("delay_steps must be at least 1"));
        }
        Self::build(t0, r / delay_steps as f64, delay_steps, segments)
    }

    #[inline]
    pub fn t0(&self) -> f64 {
        self.t0
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    #[inline]
    pub fn delay(&self) -> f64 {
        self.delay_steps as f64 * self.h
    }

    #[inline]
    pub fn last_index(&self) -> usize {
        self.n_points - 1
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.last_index())
    }

    /// Number of whole delay windows covered by the grid.
    pub fn segments(&self) -> usize {
        self.last_index() / self.delay_steps
    }

    /// The grid obtained by splitting every step into `factor` sub-steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("refinement factor must be at least 1"));
        }
        Self::new(
            self.t0,
            self.h / factor as f64,
            self.delay_steps * factor,
            self.last_index() * factor + 1,
        )
    }

    /// The tail of this grid starting at `offset`, re-based so that `offset` becomes index 0.
    pub fn tail(&self, offset: usize) -> Result<Self> {
        if offset + 1 >= self.n_points {
            return Err(Error::HorizonExhausted { requested: offset + 1, last: self.last_index() });
        }
        Self::new(self.time(offset), self.h, self.delay_steps, self.n_points - offset)
    }

    pub(crate) fn check_range(&self, lo: usize, hi: usize) -> Result<()> {
        if lo >= hi {
            return Err(invalid(format!("empty index range [{lo}, {hi}]")));
        }
        if hi > self.last_index() {
            return Err(Error::HorizonExhausted { requested: hi, last: self.last_index() });
        }
        Ok(())
    }
}

/// Vector-valued samples of a path, one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Array2<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != grid.n_points() {
            return Err(Error::DimensionMismatch { expected: grid.n_points(), found: values.nrows() });
        }
        if values.ncols() == 0 {
            return Err(invalid("paths must have dimension at least 1"));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(t)` at every grid point.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Array2::zeros((grid.n_points(), dim));
        for (i, mut row) in values.axis_iter_mut(Axis(0)).enumerate() {
            let v = f(grid.time(i));
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            for (dst, src) in row.iter_mut().zip(v) {
                *dst = src;
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, values: &self.values * factor }
    }

    /// Rows `offset..` as a path on the re-based tail grid.
    pub fn tail(&self, offset: usize) -> Result<Self> {
        let grid = self.grid.tail(offset)?;
        Ok(Self { grid, values: self.values.slice(ndarray::s![offset.., ..]).to_owned() })
    }

    /// Every `factor`-th sample, on the correspondingly coarser grid.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.grid.last_index().is_multiple_of(factor) || !self.grid.delay_steps().is_multiple_of(factor) {
            return Err(invalid(format!("cannot subsample by {factor}: grid is not divisible")));
        }
        let grid = TimeGrid::new(
            self.grid.t0(),
            self.grid.step() * factor as f64,
            self.grid.delay_steps() / factor,
            self.grid.last_index() / factor + 1,
        )?;
        let values = self.values.slice(ndarray::s![..;factor, ..]).to_owned();
        Self::new(grid, values)
    }
}

/// Exponents of a rough delay problem: driver regularity `gamma`, solution
/// regularity `beta`, field-space regularity `alpha` and the auxiliary `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoelderParams {
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl HoelderParams {
    pub fn new(gamma: f64, beta: f64, alpha: f64, kappa: f64) -> Result<Self> {
        let p = Self { gamma, beta, alpha, kappa };
        p.validate()?;
        Ok(p)
    }

    /// Checks `1/3 < α < β < γ ≤ 1/2`, `0 < κ < γ` and the compatibility inequality
    /// `β − α > (1−α)(1−β−γ+κ) / ((1−β)(1−2α+κ))`.
    pub fn validate(&self) -> Result<()> {
        let Self { gamma, beta, alpha, kappa } = *self;
        if !(1.0 / 3.0 < alpha && alpha < beta && beta < gamma && gamma <= 0.5) {
            return Err(invalid(format!(
                "exponents must satisfy 1/3 < alpha < beta < gamma <= 1/2, got alpha={alpha}, beta={beta}, gamma={gamma}"
            )));
        }
        if !(kappa > 0.0 && kappa < gamma) {
            return Err(invalid(format!("kappa must lie in (0, gamma), got {kappa}")));
        }
        let rhs = self.compatibility_bound();
        if beta - alpha <= rhs {
            return Err(invalid(format!(
                "beta - alpha = {} must exceed the compatibility bound {rhs}",
                beta - alpha
            )));
        }
        Ok(())
    }

    pub fn compatibility_bound(&self) -> f64 {
        let Self { gamma, beta, alpha, kappa } = *self;
        (1.0 - alpha) * (1.0 - beta - gamma + kappa) / ((1.0 - beta) * (1.0 - 2.0 * alpha + kappa))
    }
}

impl Default for HoelderParams {
    fn default() -> Self {
        Self { gamma: 0.499, beta: 0.48, alpha: 0.34, kappa: 0.001 }
    }
}

/// Table of `(k·h)^(-exponent)` for lags `k = 0..=n` (entry 0 unused).
pub(crate) fn inverse_powers(h: f64, exponent: f64, n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    for k in 1..=n {
        table.push((k as f64 * h).powf(-exponent));
    }
    table
}

#[inline]
pub(crate) fn euclid(a: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_{lo ≤ i < j ≤ hi} |row_j − row_i| / ((j−i)h)^exponent` for the rows of `values`.
pub(crate) fn rows_seminorm(values: ArrayView2<'_, f64>, h: f64, exponent: f64, lo: usize, hi: usize) -> f64 {
    let pw = inverse_powers(h, exponent, hi - lo);
    let dim = values.ncols();
    let mut best = 0.0_f64;
    let mut diff = vec![0.0; dim];
    for i in lo..hi {
        let ri = values.row(i);
        for j in (i + 1)..=hi {
            let rj = values.row(j);
            for c in 0..dim {
                diff[c] = rj[c] - ri[c];
            }
            let v = euclid(diff.iter().copied()) * pw[j - i];
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// `max_{lo ≤ i < j ≤ hi} norm_at(i, j) / ((j−i)h)^exponent` for a lazily
/// evaluated two-parameter quantity; `norm_at` returns `|m_{t_i, t_j}|`.
pub fn pairwise_seminorm(
    h: f64,
    lo: usize,
    hi: usize,
    exponent: f64,
    mut norm_at: impl FnMut(usize, usize) -> f64,
) -> Result<f64> {
    if lo >= hi {
        return Err(invalid(format!("empty index range [{lo}, {hi}]")));
    }
    let pw = inverse_powers(h, exponent, hi - lo);
    let mut best = 0.0_f64;
    for i in lo..hi {
        for j in (i + 1)..=hi {
            let v = norm_at(i, j) * pw[j - i];
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Grid γ-Hölder seminorm of `path` over the index window `[lo, hi]`.
pub fn hoelder_seminorm(path: &SampledPath, exponent: f64, lo: usize, hi: usize) -> Result<f64> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(invalid(format!("Hölder exponent must lie in (0, 1], got {exponent}")));
    }
    path.grid.check_range(lo, hi)?;
    Ok(rows_seminorm(path.values.view(), path.grid.step(), exponent, lo, hi))
}

/// Grid seminorm of a two-parameter function given as a dense table
/// `table[[i, j]] = |m_{t_i, t_j}|` (only `i < j` entries are read).
pub fn two_param_hoelder_seminorm(table: &Array2<f64>, h: f64, exponent: f64) -> Result<f64> {
    let n = table.nrows();
    if n < 2 || table.ncols() != n {
        return Err(invalid("two-parameter table must be square with at least 2 points"));
    }
    pairwise_seminorm(h, 0, n - 1, exponent, |i, j| table[[i, j]].abs())
}

/// A controlled path restricted to one delay window `[t − r, t]`: values and
/// Gubinelli derivative (`w × d` matrices) at the `delay_steps + 1` window points.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    base_index: usize,
    h: f64,
    values: Array2<f64>,
    gubinelli: Array3<f64>,
}

impl Segment {
    pub fn new(base_index: usize, h: f64, values: Array2<f64>, gubinelli: Array3<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(invalid("a segment needs at least 2 points"));
        }
        if gubinelli.shape()[0] != values.nrows() {
            return Err(Error::DimensionMismatch { expected: values.nrows(), found: gubinelli.shape()[0] });
        }
        if gubinelli.shape()[1] != values.ncols() {
            return Err(Error::DimensionMismatch { expected: values.ncols(), found: gubinelli.shape()[1] });
        }
        if !(h > 0.0) {
            return Err(invalid("segment step must be positive"));
        }
        Ok(Self { base_index, h, values, gubinelli })
    }

    /// Samples `f` on `[t − r, t]` (with `t − r` at `grid` index `base_index`) and
    /// attaches the derivative `deriv`; both are given in local time `τ ∈ [−r, 0]`.
    pub fn from_fn(
        grid: &TimeGrid,
        base_index: usize,
        driver_dim: usize,
        f: impl Fn(f64) -> Vec<f64>,
        deriv: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let n = grid.delay_steps();
        if base_index + n > grid.last_index() {
            return Err(Error::HorizonExhausted { requested: base_index + n, last: grid.last_index() });
        }
        let w = f(-grid.delay()).len();
        let mut values = Array2::zeros((n + 1, w));
        let mut gub = Array3::zeros((n + 1, w, driver_dim));
        for i in 0..=n {
            let tau = (i as f64 - n as f64) * grid.step();
            let v = f(tau);
            let dv = deriv(tau);
            if v.len() != w {
                return Err(Error::DimensionMismatch { expected: w, found: v.len() });
            }
            if dv.len() != w * driver_dim {
                return Err(Error::DimensionMismatch { expected: w * driver_dim, found: dv.len() });
            }
            for a in 0..w {
                values[[i, a]] = v[a];
                for k in 0..driver_dim {
                    gub[[i, a, k]] = dv[a * driver_dim + k];
                }
            }
        }
        Self::new(base_index, grid.step(), values, gub)
    }

    /// The constant segment `c` with zero Gubinelli derivative.
    pub fn constant(base_index: usize, h: f64, delay_steps: usize, value: &[f64], driver_dim: usize) -> Result<Self> {
        let mut values = Array2::zeros((delay_steps + 1, value.len()));
        for mut row in values.axis_iter_mut(Axis(0)) {
            row.assign(&ndarray::ArrayView1::from(value));
        }
        Self::new(base_index, h, values, Array3::zeros((delay_steps + 1, value.len(), driver_dim)))
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    /// Grid index of the right endpoint.
    pub fn end_index(&self) -> usize {
        self.base_index + self.delay_steps()
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn delay_steps(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn driver_dim(&self) -> usize {
        self.gubinelli.shape()[2]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn gubinelli(&self) -> &Array3<f64> {
        &self.gubinelli
    }

    pub fn left_value(&self) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(0)
    }

    pub fn right_value(&self) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(self.delay_steps())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0) && self.gubinelli.iter().all(|v| *v == 0.0)
    }

    pub(crate) fn with_base(mut self, base_index: usize) -> Self {
        self.base_index = base_index;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base_index: self.base_index,
            h: self.h,
            values: &self.values * factor,
            gubinelli: &self.gubinelli * factor,
        }
    }

    fn check_compatible(&self, other: &Segment) -> Result<()> {
        if self.values.dim() != other.values.dim() || self.gubinelli.dim() != other.gubinelli.dim() {
            return Err(invalid("segments have different shapes"));
        }
        Ok(())
    }

    /// `self + factor · other`, keeping this segment's base index.
    pub fn add_scaled(&self, factor: f64, other: &Segment) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values.scaled_add(factor, &other.values);
        out.gubinelli.scaled_add(factor, &other.gubinelli);
        Ok(out)
    }

    /// `Σ_j coeffs[j] · segments[j]`.
    pub fn linear_combination(coeffs: &[f64], segments: &[Segment]) -> Result<Self> {
        let first = segments.first().ok_or_else(|| invalid("empty linear combination"))?;
        if coeffs.len() != segments.len() {
            return Err(Error::DimensionMismatch { expected: segments.len(), found: coeffs.len() });
        }
        let mut out = first.scaled(coeffs[0]);
        for (c, s) in coeffs.iter().zip(segments).skip(1) {
            s.check_compatible(&out)?;
            out.values.scaled_add(*c, &s.values);
            out.gubinelli.scaled_add(*c, &s.gubinelli);
        }
        Ok(out)
    }

    /// Largest absolute entry-wise difference in values and derivatives.
    pub fn max_abs_diff(&self, other: &Segment) -> f64 {
        let dv = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dg = self
            .gubinelli
            .iter()
            .zip(other.gubinelli.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        dv.max(dg)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .axis_iter(Axis(0))
            .map(|r| euclid(r.iter().copied()))
            .fold(0.0, f64::max)
    }
}

/// M2 inner product `⟨ξ_0, η_0⟩ + ∫_{−r}^0 ⟨ξ_t, η_t⟩ dt`, with the point
/// component taken at the right endpoint (the current state) and the integral
/// by the trapezoid rule.
pub fn m2_inner(a: &Segment, b: &Segment) -> f64 {
    let n = a.delay_steps();
    let end = a.values.row(n).dot(&b.values.row(n));
    let mut integral = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        integral += w * a.values.row(i).dot(&b.values.row(i));
    }
    end + a.h * integral
}

/// `(|ξ_0|² + ∫_{−r}^0 |ξ_t|² dt)^{1/2}`.
pub fn m2_norm(segment: &Segment) -> f64 {
    m2_inner(segment, segment).max(0.0).sqrt()
}

/// Re-indexes `segment` so that its left endpoint sits at `new_base` on `grid`.
pub fn shift_segment(segment: &Segment, new_base: usize, grid: &TimeGrid) -> Result<Segment> {
    let end = new_base + segment.delay_steps();
    if end > grid.last_index() {
        return Err(invalid(format!(
            "target window [{new_base}, {end}] is off the grid (last index {})",
            grid.last_index()
        )));
    }
    if segment.delay_steps() != grid.delay_steps() {
        return Err(invalid("segment length does not match the grid's delay"));
    }
    Ok(segment.clone().with_base(new_base))
}
