use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Bound constants `‖σ‖_∞, ‖Dσ‖_∞, ‖D²σ‖_∞, ‖D³σ‖_∞` of a vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBounds {
    pub sup: f64,
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

/// A delay vector field `σ : W ⊕ W → L(U, W)` with its partial derivatives.
///
/// Values are `w × d` matrices stored row-major (`σ[a, i]` at `a·d + i`);
/// partials are `(w·d) × w` row-major, `∂σ[(a,i), b]` at `(a·d + i)·w + b`.
pub trait SmoothDelayField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn eval(&self, y: &[f64], z: &[f64], out: &mut [f64]);
    /// `∂σ/∂y`.
    fn d_state(&self, y: &[f64], z: &[f64], out: &mut [f64]);
    /// `∂σ/∂z`.
    fn d_delayed(&self, y: &[f64], z: &[f64], out: &mut [f64]);
    fn bounds(&self) -> FieldBounds;
}

/// `σ(y, z) = σ₁ y + σ₂ z` with `σ₁, σ₂ ∈ L(W, L(U, W))` held as `w × w × d`
/// tensors: `(σ₁ y)[a, i] = Σ_b σ₁[a, b, i] y_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDelayField {
    sigma1: Array3<f64>,
    sigma2: Array3<f64>,
    op_norm: f64,
}

impl LinearDelayField {
    pub fn new(sigma1: Array3<f64>, sigma2: Array3<f64>) -> Result<Self> {
        let s = sigma1.shape();
        if s[0] != s[1] || s[0] == 0 || s[2] == 0 {
            return Err(invalid(format!("σ₁ must be w × w × d, got {s:?}")));
        }
        if sigma2.shape() != s {
            return Err(invalid(format!("σ₂ shape {:?} differs from σ₁ shape {s:?}", sigma2.shape())));
        }
        if sigma1.iter().chain(sigma2.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("field coefficients must be finite"));
        }
        // Frobenius norm of (σ₁, σ₂) as a map W² → L(U, W): an upper bound for the operator norm
        let op_norm = sigma1.iter().chain(sigma2.iter()).map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { sigma1, sigma2, op_norm })
    }

    /// The scalar equation `dy = (a·y_t + b·y_{t−r}) dX` with `d = 1`.
    pub fn scalar(a: f64, b: f64) -> Self {
        Self::new(Array3::from_elem((1, 1, 1), a), Array3::from_elem((1, 1, 1), b)).expect("finite scalars")
    }

    /// Scalar pure delay `dy = y_{t−r} dX`.
    pub fn pure_delay() -> Self {
        Self::scalar(0.0, 1.0)
    }

    pub fn sigma1(&self) -> &Array3<f64> {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &Array3<f64> {
        &self.sigma2
    }

    /// An upper bound on the operator norm of `(y, z) ↦ σ₁y + σ₂z`.
    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    fn partial(t: &Array3<f64>, out: &mut [f64]) {
        let (w, _, d) = t.dim();
        for a in 0..w {
            for i in 0..d {
                for b in 0..w {
                    out[(a * d + i) * w + b] = t[[a, b, i]];
                }
            }
        }
    }
}

impl SmoothDelayField for LinearDelayField {
    fn state_dim(&self) -> usize {
        self.sigma1.shape()[0]
    }

    fn noise_dim(&self) -> usize {
        self.sigma1.shape()[2]
    }

    fn eval(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        let (w, _, d) = self.sigma1.dim();
        for a in 0..w {
            for i in 0..d {
                let mut acc = 0.0;
                for b in 0..w {
                    acc += self.sigma1[[a, b, i]] * y[b] + self.sigma2[[a, b, i]] * z[b];
                }
                out[a * d + i] = acc;
            }
        }
    }

    fn d_state(&self, _y: &[f64], _z: &[f64], out: &mut [f64]) {
        Self::partial(&self.sigma1, out);
    }

    fn d_delayed(&self, _y: &[f64], _z: &[f64], out: &mut [f64]) {
        Self::partial(&self.sigma2, out);
    }

    fn bounds(&self) -> FieldBounds {
        FieldBounds { sup: f64::INFINITY, first: self.op_norm, second: 0.0, third: 0.0 }
    }
}

/// `σ(y, z) = c · tanh(σ₁ y + σ₂ z)` entry-wise: a bounded, smooth saturation
/// of a linear field.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhField {
    linear: LinearDelayField,
    scale: f64,
}

impl TanhField {
    pub fn new(linear: LinearDelayField, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { linear, scale })
    }

    fn partial(&self, t: &Array3<f64>, y: &[f64], z: &[f64], out: &mut [f64]) {
        let (w, _, d) = t.dim();
        let mut lin = vec![0.0; w * d];
        self.linear.eval(y, z, &mut lin);
        for a in 0..w {
            for i in 0..d {
                let c = lin[a * d + i].cosh();
                let sech2 = self.scale / (c * c);
                for b in 0..w {
                    out[(a * d + i) * w + b] = sech2 * t[[a, b, i]];
                }
            }
        }
    }
}

impl SmoothDelayField for TanhField {
    fn state_dim(&self) -> usize {
        self.linear.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.linear.noise_dim()
    }

    fn eval(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        self.linear.eval(y, z, out);
        out.iter_mut().for_each(|v| *v = self.scale * v.tanh());
    }

    fn d_state(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        self.partial(&self.linear.sigma1, y, z, out);
    }

    fn d_delayed(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        self.partial(&self.linear.sigma2, y, z, out);
    }

    fn bounds(&self) -> FieldBounds {
        // sup |tanh^{(k)}| for k = 1, 2, 3: 1, 4/(3√3), 2
        let l = self.linear.op_norm();
        FieldBounds {
            sup: self.scale * ((self.state_dim() * self.noise_dim()) as f64).sqrt(),
            first: self.scale * l,
            second: self.scale * 4.0 / (3.0 * 3f64.sqrt()) * l * l,
            third: self.scale * 2.0 * l * l * l,
        }
    }
}

/// The constant field `σ ≡ A` (a `w × d` matrix, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField {
    w: usize,
    value: Vec<f64>,
}

impl ConstantField {
    pub fn new(w: usize, value: Vec<f64>) -> Result<Self> {
        if w == 0 || value.is_empty() || !value.len().is_multiple_of(w) {
            return Err(Error::DimensionMismatch { expected: w, found: value.len() });
        }
        Ok(Self { w, value })
    }
}

impl SmoothDelayField for ConstantField {
    fn state_dim(&self) -> usize {
        self.w
    }

    fn noise_dim(&self) -> usize {
        self.value.len() / self.w
    }

    fn eval(&self, _y: &[f64], _z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }

    fn d_state(&self, _y: &[f64], _z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn d_delayed(&self, _y: &[f64], _z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn bounds(&self) -> FieldBounds {
        let sup = self.value.iter().map(|v| v * v).sum::<f64>().sqrt();
        FieldBounds { sup, first: 0.0, second: 0.0, third: 0.0 }
    }
}

/// Largest relative discrepancy between the analytic partials of `field` and
/// central differences, over `trials` random points in `[−2, 2]^{2w}`.
pub fn check_partials(field: &dyn SmoothDelayField, seed: u64, trials: usize) -> f64 {
    let w = field.state_dim();
    let wd = w * field.noise_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-6;
    let mut worst = 0.0f64;
    let (mut plus, mut minus) = (vec![0.0; wd], vec![0.0; wd]);
    let mut analytic = vec![0.0; wd * w];
    for _ in 0..trials {
        let y: Vec<f64> = (0..w).map(|_| rng.random_range(-2.0..2.0)).collect();
        let z: Vec<f64> = (0..w).map(|_| rng.random_range(-2.0..2.0)).collect();
        for delayed in [false, true] {
            if delayed {
                field.d_delayed(&y, &z, &mut analytic);
            } else {
                field.d_state(&y, &z, &mut analytic);
            }
            for b in 0..w {
                let (mut yp, mut ym, mut zp, mut zm) = (y.clone(), y.clone(), z.clone(), z.clone());
                if delayed {
                    zp[b] += step;
                    zm[b] -= step;
                } else {
                    yp[b] += step;
                    ym[b] -= step;
                }
                field.eval(&yp, &zp, &mut plus);
                field.eval(&ym, &zm, &mut minus);
                for c in 0..wd {
                    let fd = (plus[c] - minus[c]) / (2.0 * step);
                    let an = analytic[c * w + b];
                    worst = worst.max((fd - an).abs() / an.abs().max(1.0));
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_linear(seed: u64, w: usize, d: usize) -> LinearDelayField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = Array3::from_shape_fn((w, w, d), |_| rng.random_range(-1.0..1.0));
        let s2 = Array3::from_shape_fn((w, w, d), |_| rng.random_range(-1.0..1.0));
        LinearDelayField::new(s1, s2).unwrap()
    }

    #[test]
    fn linear_eval_layout() {
        let f = random_linear(1, 2, 3);
        let (y, z) = ([0.3, -1.2], [2.0, 0.5]);
        let mut out = vec![0.0; 6];
        f.eval(&y, &z, &mut out);
        let e = f.sigma1()[[1, 0, 2]] * y[0] + f.sigma1()[[1, 1, 2]] * y[1] + f.sigma2()[[1, 0, 2]] * z[0] + f.sigma2()[[1, 1, 2]] * z[1];
        assert!((out[5] - e).abs() < 1e-15);
    }

    #[test]
    fn partials_match_finite_differences() {
        let lin = random_linear(2, 2, 2);
        assert!(check_partials(&lin, 0, 10) < 1e-4);
        let t = TanhField::new(random_linear(3, 3, 2), 0.7).unwrap();
        assert!(check_partials(&t, 1, 20) < 1e-4);
        let c = ConstantField::new(1, vec![0.5, 2.0]).unwrap();
        assert!(check_partials(&c, 2, 5) < 1e-12);
    }

    #[test]
    fn shape_validation() {
        assert!(LinearDelayField::new(Array3::zeros((2, 3, 1)), Array3::zeros((2, 3, 1))).is_err());
        assert!(LinearDelayField::new(Array3::zeros((2, 2, 1)), Array3::zeros((2, 2, 2))).is_err());
        assert!(LinearDelayField::new(Array3::from_elem((1, 1, 1), f64::NAN), Array3::zeros((1, 1, 1))).is_err());
        assert!(TanhField::new(LinearDelayField::pure_delay(), 0.0).is_err());
        assert!(ConstantField::new(2, vec![1.0; 3]).is_err());
    }
}
