use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView1, ArrayView2, ArrayView3};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug)]
struct PathData {
    grid: TimeGrid,
    x: Array2<f64>,
    area: Array3<f64>,
    delayed_area: Array3<f64>,
    gamma: f64,
}

/// A delayed rough path `(X, 𝕏, 𝕏(−r))` sampled on a uniform grid.
///
/// Only the per-step areas `𝕏_{t_j, t_{j+1}}` and `𝕏_{t_j, t_{j+1}}(−r)` are
/// stored; areas over longer intervals are rebuilt with the Chen identities
///
/// ```text
/// 𝕏_{s,t}      = 𝕏_{s,u}      + 𝕏_{u,t}      + X_{s,u}     ⊗ X_{u,t}
/// 𝕏_{s,t}(−r)  = 𝕏_{s,u}(−r)  + 𝕏_{u,t}(−r)  + X_{s−r,u−r} ⊗ X_{u,t}
/// ```
///
/// so both identities hold on the grid by construction. Convention:
/// `𝕏^{ij}_{s,t} = ∫_s^t X^i_{s,u} dX^j_u`.
///
/// The first `delay_steps` steps of the underlying data have no history one
/// delay back; their delayed areas are stored as zero and are never read.
///
/// Cloning is cheap: the samples are shared, and [`DelayedRoughPath::shift`]
/// produces a re-indexed view of the same data.
#[derive(Debug, Clone)]
pub struct DelayedRoughPath {
    data: Arc<PathData>,
    offset: usize,
    grid: TimeGrid,
}

impl DelayedRoughPath {
    pub fn new(
        grid: TimeGrid,
        x: Array2<f64>,
        area: Array3<f64>,
        delayed_area: Array3<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let n = grid.n_points();
        let d = x.ncols();
        if x.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.nrows() });
        }
        if d == 0 {
            return Err(invalid("rough paths need dimension at least 1"));
        }
        for arr in [&area, &delayed_area] {
            if arr.shape() != [n - 1, d, d] {
                return Err(invalid(format!(
                    "step areas must have shape [{}, {d}, {d}], got {:?}",
                    n - 1,
                    arr.shape()
                )));
            }
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        Ok(Self { data: Arc::new(PathData { grid, x, area, delayed_area, gamma }), offset: 0, grid })
    }

    /// The grid of this view (index 0 is the view's origin).
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.data.x.ncols()
    }

    pub fn delay_steps(&self) -> usize {
        self.grid.delay_steps()
    }

    pub fn gamma(&self) -> f64 {
        self.data.gamma
    }

    /// Offset of this view into the underlying samples, in steps.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    /// Whether the view shares its samples with `other` and starts at the same place.
    pub fn same_view(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) && self.offset == other.offset
    }

    #[inline]
    pub fn x(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.x.row(self.offset + i)
    }

    /// `X_{t_s, t_t}` written into `out`.
    #[inline]
    pub fn increment_into(&self, s: usize, t: usize, out: &mut [f64]) {
        let a = self.x(s);
        let b = self.x(t);
        for (k, o) in out.iter_mut().enumerate() {
            *o = b[k] - a[k];
        }
    }

    pub fn increment(&self, s: usize, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.increment_into(s, t, &mut out);
        out
    }

    /// `X_{t_s − r, t_t − r}`; requires `s` to have one delay of history.
    pub fn delayed_increment(&self, s: usize, t: usize) -> Result<Vec<f64>> {
        self.check_history(s)?;
        let n = self.delay_steps();
        let a = self.data.x.row(self.offset + s - n);
        let b = self.data.x.row(self.offset + t - n);
        Ok(b.iter().zip(a.iter()).map(|(b, a)| b - a).collect())
    }

    #[inline]
    pub fn step_area(&self, j: usize) -> ArrayView2<'_, f64> {
        self.data.area.index_axis(ndarray::Axis(0), self.offset + j)
    }

    #[inline]
    pub fn step_delayed_area(&self, j: usize) -> ArrayView2<'_, f64> {
        self.data.delayed_area.index_axis(ndarray::Axis(0), self.offset + j)
    }

    /// Whether delayed quantities starting at view index `s` are available.
    #[inline]
    pub fn has_history(&self, s: usize) -> bool {
        self.offset + s >= self.delay_steps()
    }

    pub(crate) fn check_history(&self, s: usize) -> Result<()> {
        if self.has_history(s) {
            Ok(())
        } else {
            Err(Error::InsufficientHistory {
                index: s,
                needed: self.delay_steps(),
                available: self.offset + s,
            })
        }
    }

    pub(crate) fn check_pair(&self, s: usize, t: usize) -> Result<()> {
        if s > t {
            return Err(invalid(format!("indices out of order: {s} > {t}")));
        }
        if t > self.grid.last_index() {
            return Err(Error::HorizonExhausted { requested: t, last: self.grid.last_index() });
        }
        Ok(())
    }

    /// `𝕏_{t_s, t_t}` by a left fold of the per-step areas.
    pub fn reconstruct_area(&self, s: usize, t: usize) -> Result<Array2<f64>> {
        self.check_pair(s, t)?;
        let d = self.dim();
        let mut acc = Array2::zeros((d, d));
        let mut fold = AreaFold::new(self, s, false);
        for _ in s..t {
            fold.advance();
        }
        acc.assign(&fold.area());
        Ok(acc)
    }

    /// `𝕏_{t_s, t_t}(−r)` by a left fold with the delayed Chen correction.
    pub fn reconstruct_delayed_area(&self, s: usize, t: usize) -> Result<Array2<f64>> {
        self.check_pair(s, t)?;
        self.check_history(s)?;
        let mut fold = AreaFold::new(self, s, true);
        for _ in s..t {
            fold.advance();
        }
        Ok(fold.delayed_area().to_owned())
    }

    /// The view re-based `k` delay windows later: `𝐗_{s, s+t}(ω) = 𝐗_{0,t}(θ_{kr}ω)`.
    /// At least one full window must remain after the new history window.
    pub fn shift(&self, k: usize) -> Result<Self> {
        let n = self.delay_steps();
        let new_offset = k * n;
        if new_offset + 2 * n > self.grid.last_index() {
            return Err(Error::HorizonExhausted {
                requested: new_offset + 2 * n,
                last: self.grid.last_index(),
            });
        }
        Ok(Self {
            data: Arc::clone(&self.data),
            offset: self.offset + new_offset,
            grid: self.grid.tail(new_offset)?,
        })
    }

    /// Path samples of the whole underlying data (ignores the view offset).
    pub fn raw_parts(&self) -> (TimeGrid, ArrayView2<'_, f64>, ArrayView3<'_, f64>, ArrayView3<'_, f64>) {
        (self.data.grid, self.data.x.view(), self.data.area.view(), self.data.delayed_area.view())
    }

    /// Rebuilds a path from this one's samples with modified per-step data.
    pub(crate) fn map_parts(
        &self,
        f: impl FnOnce(&mut Array2<f64>, &mut Array3<f64>, &mut Array3<f64>),
    ) -> Result<Self> {
        let mut x = self.data.x.clone();
        let mut area = self.data.area.clone();
        let mut delayed = self.data.delayed_area.clone();
        f(&mut x, &mut area, &mut delayed);
        let base = Self::new(self.data.grid, x, area, delayed, self.data.gamma)?;
        Ok(Self { offset: self.offset, grid: self.grid, data: base.data })
    }

    /// The dilation `δ_λ 𝐗 = (λX, λ²𝕏, λ²𝕏(−r))`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        let l2 = lambda * lambda;
        self.map_parts(|x, a, d| {
            x.mapv_inplace(|v| v * lambda);
            a.mapv_inplace(|v| v * l2);
            d.mapv_inplace(|v| v * l2);
        })
    }

    /// A path on the same grid with every sample equal to zero.
    pub fn zero_like(&self) -> Result<Self> {
        self.map_parts(|x, a, d| {
            x.fill(0.0);
            a.fill(0.0);
            d.fill(0.0);
        })
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "{:?} (dim {}) vs {:?} (dim {})",
                self.grid,
                self.dim(),
                other.grid,
                other.dim()
            )));
        }
        Ok(())
    }
}

/// Running Chen fold of `𝕏_{s,t}` and `𝕏_{s,t}(−r)` for a fixed left point `s`.
pub(crate) struct AreaFold<'a> {
    path: &'a DelayedRoughPath,
    s: usize,
    t: usize,
    delayed: bool,
    area: Array2<f64>,
    delayed_area: Array2<f64>,
    inc: Vec<f64>,
    delayed_inc: Vec<f64>,
    step_inc: Vec<f64>,
}

impl<'a> AreaFold<'a> {
    pub(crate) fn new(path: &'a DelayedRoughPath, s: usize, delayed: bool) -> Self {
        let d = path.dim();
        Self {
            path,
            s,
            t: s,
            delayed,
            area: Array2::zeros((d, d)),
            delayed_area: Array2::zeros((d, d)),
            inc: vec![0.0; d],
            delayed_inc: vec![0.0; d],
            step_inc: vec![0.0; d],
        }
    }

    /// Extends the fold from `[s, t]` to `[s, t+1]`.
    pub(crate) fn advance(&mut self) {
        let d = self.path.dim();
        let t = self.t;
        self.path.increment_into(t, t + 1, &mut self.step_inc);
        let step = self.path.step_area(t);
        for i in 0..d {
            for j in 0..d {
                self.area[[i, j]] += step[[i, j]] + self.inc[i] * self.step_inc[j];
            }
        }
        if self.delayed {
            let dstep = self.path.step_delayed_area(t);
            for i in 0..d {
                for j in 0..d {
                    self.delayed_area[[i, j]] += dstep[[i, j]] + self.delayed_inc[i] * self.step_inc[j];
                }
            }
            let n = self.path.delay_steps();
            let off = self.path.offset;
            let a = self.path.data.x.row(off + t - n);
            let b = self.path.data.x.row(off + t + 1 - n);
            for k in 0..d {
                self.delayed_inc[k] += b[k] - a[k];
            }
        }
        for k in 0..d {
            self.inc[k] += self.step_inc[k];
        }
        self.t += 1;
    }

    #[allow(dead_code)]
    pub(crate) fn left(&self) -> usize {
        self.s
    }

    pub(crate) fn area(&self) -> ArrayView2<'_, f64> {
        self.area.view()
    }

    pub(crate) fn delayed_area(&self) -> ArrayView2<'_, f64> {
        self.delayed_area.view()
    }

    pub(crate) fn increment(&self) -> &[f64] {
        &self.inc
    }
}

#[cfg(test)]
pub(crate) use tests::random_path;
