use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{m2_inner, m2_norm, rows_seminorm, Segment};
use crate::rough::DelayedRoughPath;
use crate::solver::segment_path;

/// A norm on delay segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha")]
pub enum NormKind {
    /// `(|ξ_0|² + ∫|ξ_t|² dt)^{1/2}`.
    M2,
    /// Largest value on the window.
    Sup,
    /// Sup norm plus the `α`-Hölder seminorm of the values.
    Hoelder(f64),
    /// Controlled-path norm `|ξ_{−r}| + |ξ′_{−r}| + ‖ξ′‖_α + ‖ξ^#‖_{2α}` over
    /// the driver on the segment's own window.
    ControlledD(f64),
}

impl NormKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormKind::Hoelder(a) | NormKind::ControlledD(a) if !(a > 1.0 / 3.0 && a < 0.5) => {
                Err(invalid(format!("norm exponent must lie in (1/3, 1/2), got {a}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormKind::M2 => "M2".into(),
            NormKind::Sup => "Sup".into(),
            NormKind::Hoelder(a) => format!("Hoelder({a})"),
            NormKind::ControlledD(a) => format!("ControlledD({a})"),
        }
    }

    /// The four norms compared in the norm-independence experiment.
    pub fn standard_set(alpha: f64) -> [NormKind; 4] {
        [NormKind::M2, NormKind::Sup, NormKind::Hoelder(alpha), NormKind::ControlledD(alpha)]
    }
}

/// A norm bound to the driver that the segments live on.
#[derive(Clone, Copy)]
pub struct SegmentNorm<'a> {
    pub kind: NormKind,
    pub driver: &'a DelayedRoughPath,
}

impl<'a> SegmentNorm<'a> {
    pub fn new(kind: NormKind, driver: &'a DelayedRoughPath) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, driver })
    }

    pub fn eval(&self, x: &Segment) -> Result<f64> {
        Ok(match self.kind {
            NormKind::M2 => m2_norm(x),
            NormKind::Sup => x.sup_norm(),
            NormKind::Hoelder(a) => {
                let n = x.delay_steps();
                x.sup_norm() + rows_seminorm(x.values().view(), x.step(), a, 0, n)
            }
            NormKind::ControlledD(a) => segment_path(x, self.driver)?.norm_with_exponent(a),
        })
    }
}

/// Distance from `x` to the span of `basis`, with the coefficients that achieve it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanDistance {
    pub distance: f64,
    pub coefficients: Vec<f64>,
}

/// M2-orthogonal projection coefficients of `x` onto `basis` by modified
/// Gram–Schmidt in coefficient space. Directions whose residual falls below
/// `1e-12` of their norm are dropped, which projects onto the numerical range
/// of a dependent basis.
pub fn m2_projection(x: &Segment, basis: &[Segment]) -> Vec<f64> {
    let k = basis.len();
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| m2_inner(&basis[i], &basis[j])).collect()).collect();
    let c: Vec<f64> = basis.iter().map(|b| m2_inner(b, x)).collect();
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                s += u[i] * gram[i][j] * v[j];
            }
        }
        s
    };
    // orthonormal directions q_l = Σ_i Q[l][i] b_i
    let mut q: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        let original = gram[i][i].max(0.0).sqrt();
        for _ in 0..2 {
            for ql in &q {
                let p = inner(ql, &v);
                for (a, b) in v.iter_mut().zip(ql) {
                    *a -= p * b;
                }
            }
        }
        let norm = inner(&v, &v).max(0.0).sqrt();
        if norm > 1e-12 * original && norm > 0.0 {
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
        }
    }
    let mut beta = vec![0.0; k];
    for ql in &q {
        let p: f64 = ql.iter().zip(&c).map(|(a, b)| a * b).sum();
        for (b, a) in beta.iter_mut().zip(ql) {
            *b += p * a;
        }
    }
    beta
}

struct Residual<'a> {
    x: &'a Segment,
    basis: &'a [Segment],
    norm: SegmentNorm<'a>,
}

impl Residual<'_> {
    fn at(&self, beta: &[f64]) -> Result<f64> {
        let mut r = self.x.clone();
        for (b, s) in beta.iter().zip(self.basis) {
            r = r.add_scaled(-b, s)?;
        }
        self.norm.eval(&r)
    }
}

impl CostFunction for Residual<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.at(p)?)
    }
}

/// `d(x, ⟨basis⟩)` in the given norm.
///
/// M2 is the exact projection residual. The other norms minimize the residual
/// norm over the coefficients with Nelder–Mead restarts seeded at the M2
/// optimum, so the value is an upper bound on the infimum. The result never
/// exceeds `‖x‖`.
pub fn distance_to_span(x: &Segment, basis: &[Segment], norm: SegmentNorm<'_>) -> Result<SpanDistance> {
    for b in basis {
        if b.values().dim() != x.values().dim() || b.gubinelli().dim() != x.gubinelli().dim() {
            return Err(invalid("basis and vector have different window shapes"));
        }
    }
    let problem = Residual { x, basis, norm };
    let plain = norm.eval(x)?;
    let zero = vec![0.0; basis.len()];
    if basis.is_empty() {
        return Ok(SpanDistance { distance: plain, coefficients: zero });
    }
    let seed = m2_projection(x, basis);
    let mut best = (problem.at(&seed)?, seed.clone());
    if plain < best.0 {
        best = (plain, zero);
    }
    if norm.kind == NormKind::M2 {
        return Ok(SpanDistance { distance: best.0, coefficients: best.1 });
    }
    let scale: Vec<f64> = basis
        .iter()
        .map(|b| Ok(norm.eval(b)?.max(f64::MIN_POSITIVE)))
        .collect::<Result<_>>()?;
    let mut step = 0.5;
    for _ in 0..4 {
        let start = best.1.clone();
        let mut simplex = vec![start.clone()];
        for (j, s) in scale.iter().enumerate() {
            let mut v = start.clone();
            v[j] += step * best.0.max(plain * 1e-8) / s;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-13 * plain.max(f64::MIN_POSITIVE))
            .map_err(|e| invalid(e.to_string()))?;
        let res = Executor::new(Residual { x, basis, norm }, solver)
            .configure(|s| s.max_iters(400 * basis.len() as u64))
            .run()
            .map_err(|e| invalid(e.to_string()))?;
        let state = res.state();
        if let Some(p) = state.get_best_param() {
            let v = state.get_best_cost();
            if v < best.0 {
                best = (v, p.clone());
            }
        }
        step *= 0.2;
    }
    Ok(SpanDistance { distance: best.0, coefficients: best.1 })
}

/// `Vol(x_1, …, x_k) = ‖x_1‖ ∏_{i ≥ 2} d(x_i, ⟨x_1, …, x_{i−1}⟩)`.
pub fn volume(vectors: &[Segment], norm: SegmentNorm<'_>) -> Result<f64> {
    Ok(volume_factors(vectors, norm)?.iter().product())
}

/// The successive factors `‖x_1‖, d(x_2, ⟨x_1⟩), …` of [`volume`].
pub fn volume_factors(vectors: &[Segment], norm: SegmentNorm<'_>) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Err(invalid("volume of an empty family"));
    }
    (0..vectors.len()).map(|i| Ok(distance_to_span(&vectors[i], &vectors[..i], norm)?.distance)).collect()
}
