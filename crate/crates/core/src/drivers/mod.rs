//! Drivers: Brownian motion with Itô and Stratonovich delayed lifts, mollified
//! (Wong–Zakai) drivers, piecewise-linear lifts of deterministic paths, the
//! shift `θ` and the homogeneous distance.
//!
//! Every Brownian driver lives on `[−r, segments·r]` with `B_0 = 0`; the
//! increments come from a ChaCha8 stream keyed by the seed, so a given
//! configuration always produces the same bits.

mod archive;
mod kernel;
mod lift;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::grid::{SampledPath, TimeGrid};
use crate::rough::{first_index_with_history, seminorm_terms, DelayedRoughPath};

pub use archive::{read_driver, write_driver, ARCHIVE_MAGIC};
pub use kernel::MollifierKernel;
pub use lift::{lift_ito_path, lift_piecewise_linear, to_ito, to_stratonovich};

const STREAM_FORWARD: u64 = 0;
const STREAM_HISTORY: u64 = 1;

#[derive(Debug, Clone)]
pub enum DriverKind {
    Ito,
    Stratonovich,
    /// Brownian motion mollified at scale `epsilon`, lifted as a smooth path.
    Mollified { epsilon: f64 },
    /// The canonical lift of a given fine path.
    PiecewiseLinear(SampledPath),
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub dim: usize,
    /// The delay `r`.
    pub delay: f64,
    /// Coarse steps per delay window.
    pub delay_steps: usize,
    /// Delay windows after time 0.
    pub segments: usize,
    /// Fine sub-steps per coarse step.
    pub refine: usize,
    pub seed: u64,
    pub kind: DriverKind,
    /// Replace the Itô area diagonal by `((ΔB)² − h)/2`.
    pub exact_ito_diagonal: bool,
    /// Hölder exponent recorded on the lifted path.
    pub gamma: f64,
}

impl DriverConfig {
    pub fn new(dim: usize, delay_steps: usize, segments: usize) -> Self {
        Self {
            dim,
            delay: 1.0,
            delay_steps,
            segments,
            refine: 64,
            seed: 0,
            kind: DriverKind::Ito,
            exact_ito_diagonal: false,
            gamma: 0.499,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_refine(mut self, refine: usize) -> Self {
        self.refine = refine;
        self
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_kind(mut self, kind: DriverKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.delay_steps == 0 || self.segments == 0 || self.refine == 0 {
            return Err(invalid("dim, delay_steps, segments and refine must all be at least 1"));
        }
        if !(self.delay > 0.0 && self.delay.is_finite()) {
            return Err(invalid(format!("delay must be positive, got {}", self.delay)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if let DriverKind::Mollified { epsilon } = self.kind {
            snap_epsilon(epsilon, self.fine_step(), self.delay)?;
        }
        Ok(())
    }

    pub fn coarse_step(&self) -> f64 {
        self.delay / self.delay_steps as f64
    }

    pub fn fine_step(&self) -> f64 {
        self.delay / (self.delay_steps * self.refine) as f64
    }

    /// Coarse grid on `[−r, segments·r]`.
    pub fn coarse_grid(&self) -> Result<TimeGrid> {
        TimeGrid::build(-self.delay, self.coarse_step(), self.delay_steps, self.segments + 1)
    }

    /// Fine grid on `[−r, segments·r]`.
    pub fn fine_grid(&self) -> Result<TimeGrid> {
        TimeGrid::build(-self.delay, self.fine_step(), self.delay_steps * self.refine, self.segments + 1)
    }

    /// The mollification scale actually used, or `None` for other kinds.
    pub fn snapped_epsilon(&self) -> Result<Option<f64>> {
        match self.kind {
            DriverKind::Mollified { epsilon } => Ok(Some(snap_epsilon(epsilon, self.fine_step(), self.delay)?.1)),
            _ => Ok(None),
        }
    }
}

/// Rounds `epsilon` to a whole number `m ≥ 1` of steps `h`, returning
/// `(m, m·h)`. `epsilon` must be at least `h` and at most `max`.
pub fn snap_epsilon(epsilon: f64, h: f64, max: f64) -> Result<(usize, f64)> {
    if !(epsilon.is_finite() && epsilon >= h * (1.0 - 1e-12)) {
        return Err(invalid(format!("mollification scale {epsilon} is below the fine step {h}")));
    }
    let m = ((epsilon / h).round() as usize).max(1);
    let snapped = m as f64 * h;
    if snapped > max * (1.0 + 1e-12) {
        return Err(invalid(format!("mollification scale {snapped} exceeds the available history {max}")));
    }
    Ok((m, snapped))
}

fn fill_increments(rng: &mut ChaCha8Rng, sd: f64, out: &mut [f64]) {
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = sd * z;
    }
}

/// Brownian motion on the fine grid over `[−r, segments·r]`, pinned at
/// `B_0 = 0`.
pub fn sample_brownian(config: &DriverConfig) -> Result<SampledPath> {
    config.validate()?;
    let grid = config.fine_grid()?;
    let d = config.dim;
    let n = grid.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_FORWARD);
    let sd = config.fine_step().sqrt();
    let mut values = Array2::zeros((n, d));
    let mut inc = vec![0.0; d];
    for i in 1..n {
        fill_increments(&mut rng, sd, &mut inc);
        for k in 0..d {
            values[[i, k]] = values[[i - 1, k]] + inc[k];
        }
    }
    let zero = config.delay_steps * config.refine;
    let origin = values.row(zero).to_owned();
    for mut row in values.rows_mut() {
        row -= &origin;
    }
    SampledPath::new(grid, values)
}

/// [`sample_brownian`] extended `extra` fine steps further into the past.
///
/// The values on `[−r, segments·r]` are identical to [`sample_brownian`]; the
/// extra history is drawn backwards from `−r` out of an independent stream.
pub fn sample_brownian_with_history(config: &DriverConfig, extra: usize) -> Result<SampledPath> {
    let base = sample_brownian(config)?;
    if extra == 0 {
        return Ok(base);
    }
    let d = config.dim;
    let h = config.fine_step();
    let n = base.grid().n_points();
    let mut values = Array2::zeros((n + extra, d));
    values.slice_mut(ndarray::s![extra.., ..]).assign(base.values());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_HISTORY);
    let mut inc = vec![0.0; d];
    for i in (0..extra).rev() {
        fill_increments(&mut rng, h.sqrt(), &mut inc);
        for k in 0..d {
            values[[i, k]] = values[[i + 1, k]] - inc[k];
        }
    }
    let grid = TimeGrid::new(
        base.grid().t0() - extra as f64 * h,
        h,
        base.grid().delay_steps(),
        n + extra,
    )?;
    SampledPath::new(grid, values)
}

/// Itô lift of the Brownian motion of `config` on the coarse grid.
pub fn lift_ito(config: &DriverConfig) -> Result<DelayedRoughPath> {
    let fine = sample_brownian(config)?;
    lift_ito_path(&fine, config.delay_steps, config.gamma, config.exact_ito_diagonal)
}

/// Discrete convolution `t ↦ Σ_k w_k b_{t − k h}` with the kernel spread over
/// `ε`, snapped to a multiple of the grid step.
///
/// The result lives on the tail of the grid starting `ε` later, the first
/// point at which the whole kernel window is available.
pub fn mollify(b: &SampledPath, epsilon: f64, kernel: &MollifierKernel) -> Result<SampledPath> {
    let grid = b.grid();
    let (m, _) = snap_epsilon(epsilon, grid.step(), grid.t_end() - grid.t0())?;
    if m >= grid.last_index() {
        return Err(invalid("mollification window covers the whole path"));
    }
    let w = kernel.weights(m);
    let out_grid = grid.tail(m)?;
    let v = b.values();
    let mut out = Array2::zeros((out_grid.n_points(), b.dim()));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        for (k, wk) in w.iter().enumerate() {
            row.scaled_add(*wk, &v.row(i + m - k));
        }
    }
    SampledPath::new(out_grid, out)
}

/// The mollified Brownian path `B^ε_t = ∫ B_{−εz, t−εz} ρ(z) dz` on the fine
/// grid over `[−r, segments·r]`, together with the snapped `ε`.
pub fn mollified_brownian(config: &DriverConfig, epsilon: f64, kernel: &MollifierKernel) -> Result<(SampledPath, f64)> {
    config.validate()?;
    let nf = config.delay_steps * config.refine;
    let (m, snapped) = snap_epsilon(epsilon, config.fine_step(), config.delay)?;
    let extended = sample_brownian_with_history(config, nf)?;
    let smooth = mollify(&extended, snapped, kernel)?;
    let mut tail = smooth.tail(nf - m)?.into_values();
    let origin = tail.row(nf).to_owned();
    for mut row in tail.rows_mut() {
        row -= &origin;
    }
    Ok((SampledPath::new(config.fine_grid()?, tail)?, snapped))
}

/// Builds the lifted driver described by `config`.
pub fn build_driver(config: &DriverConfig) -> Result<DelayedRoughPath> {
    config.validate()?;
    match &config.kind {
        DriverKind::Ito => lift_ito(config),
        DriverKind::Stratonovich => to_stratonovich(&lift_ito(config)?),
        DriverKind::Mollified { epsilon } => {
            let (path, _) = mollified_brownian(config, *epsilon, &MollifierKernel::bump())?;
            lift_piecewise_linear(&path, config.delay_steps, config.gamma)
        }
        DriverKind::PiecewiseLinear(path) => lift_piecewise_linear(path, config.delay_steps, config.gamma),
    }
}

/// Homogeneous distance
/// `‖X − Y‖_γ + ‖𝕏 − 𝕐‖_{2γ}^{1/2} + ‖𝕏(−r) − 𝕐(−r)‖_{2γ}^{1/2}` over every
/// grid point with history.
pub fn homogeneous_distance(a: &DelayedRoughPath, b: &DelayedRoughPath, gamma: f64) -> Result<f64> {
    let lo = first_index_with_history(a);
    let [p, x, dx] = seminorm_terms(a, Some(b), gamma, lo, a.grid().last_index())?;
    Ok(p + x.sqrt() + dx.sqrt())
}

/// The shift `θ_{k r}`: a view of the same samples re-based `k` windows later.
pub fn shift_driver(p: &DelayedRoughPath, k: usize) -> Result<DelayedRoughPath> {
    p.shift(k)
}
