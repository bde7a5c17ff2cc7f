//! Volumes of segment families, `D_k` lower bounds and Benettin-style
//! Lyapunov-spectrum estimates for the segment cocycle.

mod norms;

pub use norms::{distance_to_span, m2_projection, volume, volume_factors, NormKind, SegmentNorm, SpanDistance};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{m2_inner, m2_norm, Segment};
use crate::rough::DelayedRoughPath;
use crate::solver::StepSolver;
use crate::stats::batch_means;

/// Number of batches behind every confidence half-width.
pub const BATCHES: usize = 20;

/// Smallest M2 residual a renormalized basis vector may have before the
/// remaining directions count as collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-300;

/// `k` random smooth segments on the driver window starting at `base`: each
/// component is a short random Fourier series, with zero Gubinelli derivative.
pub fn smooth_basis(drp: &DelayedRoughPath, state_dim: usize, base: usize, k: usize, seed: u64) -> Result<Vec<Segment>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = drp.grid().delay();
    let d = drp.dim();
    (0..k)
        .map(|_| {
            let coef: Vec<[f64; 7]> =
                (0..state_dim).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
            Segment::from_fn(
                drp.grid(),
                base,
                d,
                move |t| {
                    let u = std::f64::consts::PI * (t + r) / r;
                    coef.iter()
                        .map(|c| c[0] + (1..=3).map(|m| c[2 * m - 1] * (m as f64 * u).cos() + c[2 * m] * (m as f64 * u).sin()).sum::<f64>())
                        .collect()
                },
                |_| vec![0.0; state_dim * d],
            )
        })
        .collect()
}

/// M2 Gram–Schmidt. Returns the orthonormal family and the residual norms;
/// stops at the first residual below [`COLLAPSE_THRESHOLD`].
pub fn m2_orthonormalize(vectors: &[Segment]) -> Result<(Vec<Segment>, Vec<f64>)> {
    let mut out: Vec<Segment> = Vec::with_capacity(vectors.len());
    let mut norms = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &out {
                r = r.add_scaled(-m2_inner(&r, q), q)?;
            }
        }
        let n = m2_norm(&r);
        norms.push(n);
        if !(n >= COLLAPSE_THRESHOLD) {
            break;
        }
        out.push(r.scaled(1.0 / n));
    }
    Ok((out, norms))
}

fn advance(solver: &dyn StepSolver, drp: &DelayedRoughPath, x: &Segment, steps: usize) -> Result<Segment> {
    let mut cur = x.clone();
    for _ in 0..steps {
        cur = solver.step(&cur, drp, cur.end_index())?;
    }
    Ok(cur)
}

/// Lyapunov spectrum estimate from one basis trajectory, read out in one norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    pub k: usize,
    pub norm: NormKind,
    pub n_steps: usize,
    pub seed: u64,
    /// `per_step_log_vol[n][j]`: log-volume growth of the leading `j + 1`
    /// basis vectors over step `n`.
    pub per_step_log_vol: Vec<Vec<f64>>,
    /// `λ_1 ≥ λ_2 ≥ …`; `-inf` (serialized as null) past a collapse.
    pub lambda: Vec<f64>,
    #[serde(rename = "Lambda")]
    pub big_lambda: Vec<f64>,
    /// 95% batch-means half-widths of `lambda`.
    pub lambda_half_width: Vec<f64>,
    #[serde(rename = "Lambda_half_width")]
    pub big_lambda_half_width: Vec<f64>,
    /// First basis index whose direction collapsed, if any.
    pub collapsed_from: Option<usize>,
    /// The initial basis is assumed generic (not inside a slow Oseledets subspace).
    pub generic_basis_assumed: bool,
}

/// A group of exponents that cannot be told apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentCluster {
    /// Mean of the grouped `λ_j`.
    pub mu: f64,
    pub multiplicity: usize,
    /// Zero-based indices into `lambda`.
    pub members: Vec<usize>,
}

/// `sqrt(a² + b²)`.
pub fn combined_half_width(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

impl SpectrumEstimate {
    fn from_increments(k: usize, norm: NormKind, seed: u64, incs: Vec<Vec<f64>>, collapsed_from: Option<usize>) -> Self {
        let n = incs.len();
        let live = collapsed_from.unwrap_or(k);
        let mut big_lambda = vec![f64::NEG_INFINITY; k];
        let mut big_hw = vec![f64::NAN; k];
        let mut lambda = vec![f64::NEG_INFINITY; k];
        let mut hw = vec![f64::NAN; k];
        for j in 0..live {
            let series: Vec<f64> = incs.iter().map(|r| r[j]).collect();
            let bm = batch_means(&series, BATCHES);
            big_lambda[j] = bm.mean;
            big_hw[j] = bm.half_width;
            let diff: Vec<f64> = incs.iter().map(|r| if j == 0 { r[0] } else { r[j] - r[j - 1] }).collect();
            let bm = batch_means(&diff, BATCHES);
            lambda[j] = if j == 0 { big_lambda[0] } else { big_lambda[j] - big_lambda[j - 1] };
            hw[j] = bm.half_width;
        }
        Self {
            k,
            norm,
            n_steps: n,
            seed,
            per_step_log_vol: incs,
            lambda,
            big_lambda,
            lambda_half_width: hw,
            big_lambda_half_width: big_hw,
            collapsed_from,
            generic_basis_assumed: true,
        }
    }

    /// Whether `λ_{j+1} ≤ λ_j + combined half-width` for every finite pair.
    pub fn is_ordered_within_confidence(&self) -> bool {
        self.lambda.windows(2).zip(self.lambda_half_width.windows(2)).all(|(l, h)| {
            !l[1].is_finite() || l[1] <= l[0] + combined_half_width(h[0], h[1])
        })
    }

    /// Groups neighbouring exponents closer than three combined half-widths.
    pub fn clusters(&self) -> Vec<ExponentCluster> {
        let mut out: Vec<ExponentCluster> = Vec::new();
        for (j, (&l, &h)) in self.lambda.iter().zip(&self.lambda_half_width).enumerate() {
            if !l.is_finite() {
                break;
            }
            let joins = j > 0
                && out.last().is_some()
                && (self.lambda[j - 1] - l).abs() < 3.0 * combined_half_width(self.lambda_half_width[j - 1], h);
            if joins {
                let c = out.last_mut().expect("checked");
                c.members.push(j);
                c.multiplicity += 1;
                c.mu = c.members.iter().map(|&i| self.lambda[i]).sum::<f64>() / c.multiplicity as f64;
            } else {
                out.push(ExponentCluster { mu: l, multiplicity: 1, members: vec![j] });
            }
        }
        out
    }
}

/// Benettin iteration of a given initial family, read out in several norms
/// at once. The basis is always renormalized in M2, so every read-out shares
/// one trajectory. Returns the estimates and the final renormalized basis.
pub fn benettin_from_basis(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    initial: &[Segment],
    n_steps: usize,
    norms: &[NormKind],
    seed: u64,
) -> Result<(Vec<SpectrumEstimate>, Vec<Segment>)> {
    let k = initial.len();
    if k == 0 || norms.is_empty() {
        return Err(invalid("need at least one basis vector and one norm"));
    }
    let bound: Vec<SegmentNorm<'_>> = norms.iter().map(|&n| SegmentNorm::new(n, drp)).collect::<Result<_>>()?;
    let (mut basis, r0) = m2_orthonormalize(initial)?;
    if basis.len() < k {
        return Err(invalid(format!("initial basis is degenerate at vector {} (residual {:e})", basis.len(), r0[basis.len()])));
    }
    let mut collapsed: Option<usize> = None;
    let mut incs: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n_steps); norms.len()];
    for _ in 0..n_steps {
        let live = basis.len();
        let images: Vec<Segment> = basis
            .iter()
            .map(|h| solver.step(h, drp, h.end_index()))
            .collect::<Result<_>>()?;
        for (nu, series) in bound.iter().zip(incs.iter_mut()) {
            let before = volume_factors(&basis, *nu)?;
            let after = volume_factors(&images, *nu)?;
            let mut row = vec![f64::NEG_INFINITY; k];
            let mut acc = 0.0;
            for j in 0..live {
                acc += after[j].ln() - before[j].ln();
                row[j] = acc;
            }
            series.push(row);
        }
        let (next, _) = m2_orthonormalize(&images)?;
        if next.len() < live {
            collapsed = Some(next.len());
        }
        basis = next;
        if basis.is_empty() {
            break;
        }
    }
    let estimates = norms
        .iter()
        .zip(incs)
        .map(|(&nu, series)| SpectrumEstimate::from_increments(k, nu, seed, series, collapsed))
        .collect();
    Ok((estimates, basis))
}

/// Lyapunov spectrum estimate for the first `k` exponents over `n_steps`
/// delay windows, from a random smooth initial basis drawn with `seed`.
pub fn benettin_spectrum(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    k: usize,
    n_steps: usize,
    norm: NormKind,
    seed: u64,
) -> Result<SpectrumEstimate> {
    let basis = smooth_basis(drp, solver.field().state_dim(), 0, k, seed)?;
    let (mut est, _) = benettin_from_basis(solver, drp, &basis, n_steps, &[norm], seed)?;
    Ok(est.remove(0))
}

/// One Benettin trajectory read out in each of `norms`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormIndependenceReport {
    pub estimates: Vec<SpectrumEstimate>,
}

impl NormIndependenceReport {
    /// Largest pairwise `|λ_1(ν) − λ_1(ν′)|` and, for that pair, the
    /// combined half-width.
    pub fn lambda1_spread(&self) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for (i, a) in self.estimates.iter().enumerate() {
            for b in &self.estimates[i + 1..] {
                let gap = (a.lambda[0] - b.lambda[0]).abs();
                if gap >= worst.0 {
                    worst = (gap, combined_half_width(a.lambda_half_width[0], b.lambda_half_width[0]));
                }
            }
        }
        worst
    }

    /// Rows `(norm, j, λ_j, half-width)` with one-based `j`.
    pub fn rows(&self) -> Vec<(String, usize, f64, f64)> {
        self.estimates
            .iter()
            .flat_map(|e| (0..e.k).map(move |j| (e.norm.label(), j + 1, e.lambda[j], e.lambda_half_width[j])))
            .collect()
    }
}

pub fn norm_independence_report(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    k: usize,
    n_steps: usize,
    seed: u64,
    norms: &[NormKind],
) -> Result<NormIndependenceReport> {
    let basis = smooth_basis(drp, solver.field().state_dim(), 0, k, seed)?;
    let (estimates, _) = benettin_from_basis(solver, drp, &basis, n_steps, norms, seed)?;
    Ok(NormIndependenceReport { estimates })
}

/// Sample-based lower bound for `D_k(φ(n, ω, ·))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkEstimate {
    /// Largest sampled volume of the images of a unit `k`-tuple.
    pub dk: f64,
    /// Largest sampled image norm of a unit vector (operator-norm estimate).
    pub d1: f64,
    /// Image volume of each sampled tuple.
    pub volumes: Vec<f64>,
}

/// Each tuple is rescaled to unit vectors in `norm`, pushed `n` windows
/// forward, and its image volume measured.
pub fn dk_estimate_on(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    n: usize,
    samples: &[Vec<Segment>],
    norm: NormKind,
) -> Result<DkEstimate> {
    let nu = SegmentNorm::new(norm, drp)?;
    let mut d1 = 0.0_f64;
    let mut volumes = Vec::with_capacity(samples.len());
    for tuple in samples {
        let mut images = Vec::with_capacity(tuple.len());
        for x in tuple {
            let unit = x.scaled(1.0 / nu.eval(x)?);
            let y = advance(solver, drp, &unit, n)?;
            d1 = d1.max(nu.eval(&y)?);
            images.push(y);
        }
        volumes.push(volume(&images, nu)?);
    }
    let dk = volumes.iter().copied().fold(0.0, f64::max);
    Ok(DkEstimate { dk, d1, volumes })
}

/// Images of the sampled tuples after `n` windows, made unit by the
/// Gram–Schmidt rule of the given norm: each vector is replaced by its
/// residual against the earlier ones, divided by the residual's norm. The
/// image volume then factors exactly through the next step.
pub fn normalized_images(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    n: usize,
    samples: &[Vec<Segment>],
    norm: NormKind,
) -> Result<Vec<Vec<Segment>>> {
    let nu = SegmentNorm::new(norm, drp)?;
    samples
        .iter()
        .map(|tuple| {
            let images: Vec<Segment> = tuple
                .iter()
                .map(|x| advance(solver, drp, &x.scaled(1.0 / nu.eval(x)?), n))
                .collect::<Result<_>>()?;
            (0..images.len())
                .map(|i| {
                    let sd = distance_to_span(&images[i], &images[..i], nu)?;
                    let mut r = images[i].clone();
                    for (b, s) in sd.coefficients.iter().zip(&images[..i]) {
                        r = r.add_scaled(-b, s)?;
                    }
                    Ok(r.scaled(1.0 / nu.eval(&r)?))
                })
                .collect()
        })
        .collect()
}

/// `trials` random smooth unit `k`-tuples on the window at `base`, followed by
/// the M2-orthonormalized tuple that [`benettin_spectrum`] would start from.
pub fn dk_samples(drp: &DelayedRoughPath, state_dim: usize, base: usize, k: usize, trials: usize, seed: u64) -> Result<Vec<Vec<Segment>>> {
    let mut out: Vec<Vec<Segment>> = (0..trials)
        .map(|t| smooth_basis(drp, state_dim, base, k, seed.wrapping_add(1 + t as u64)))
        .collect::<Result<_>>()?;
    let (b, _) = m2_orthonormalize(&smooth_basis(drp, state_dim, base, k, seed)?)?;
    if b.len() == k {
        out.push(b);
    }
    Ok(out)
}

/// Lower bound on `D_k(φ(n, ω, ·))` from `trials` random unit tuples plus the
/// Benettin starting basis.
pub fn dk_estimate(
    solver: &dyn StepSolver,
    drp: &DelayedRoughPath,
    n: usize,
    k: usize,
    trials: usize,
    norm: NormKind,
    seed: u64,
) -> Result<DkEstimate> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let samples = dk_samples(drp, solver.field().state_dim(), 0, k, trials, seed)?;
    dk_estimate_on(solver, drp, n, &samples, norm)
}
