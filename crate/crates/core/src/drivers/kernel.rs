use crate::error::{invalid, Result};

const DEFAULT_RESOLUTION: usize = 8192;

/// A smoothing kernel `ρ ≥ 0` supported in `[0, 1]` with `∫ρ = 1`, held as
/// equispaced samples `ρ(k / n)`, `k = 0..=n`, already multiplied by the
/// normalization constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    samples: Vec<f64>,
    normalization: f64,
}

fn bump(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        (-1.0 / (z * (1.0 - z))).exp()
    }
}

fn trapezoid(samples: &[f64]) -> f64 {
    let n = samples.len() - 1;
    let inner: f64 = samples[1..n].iter().sum();
    (inner + 0.5 * (samples[0] + samples[n])) / n as f64
}

impl MollifierKernel {
    /// The bump `c · exp(−1/(z(1−z)))` on `(0, 1)`.
    pub fn bump() -> Self {
        Self::from_fn(bump, DEFAULT_RESOLUTION).expect("the bump is a valid kernel")
    }

    /// Samples `f` on `[0, 1]` at `resolution + 1` points and normalizes by
    /// the trapezoid rule.
    pub fn from_fn(f: impl Fn(f64) -> f64, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid("kernel resolution must be at least 2"));
        }
        let raw: Vec<f64> = (0..=resolution).map(|k| f(k as f64 / resolution as f64)).collect();
        if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("kernel samples must be finite and non-negative"));
        }
        let mass = trapezoid(&raw);
        if !(mass > 0.0) {
            return Err(invalid("kernel has zero mass"));
        }
        let normalization = 1.0 / mass;
        let samples = raw.into_iter().map(|v| v * normalization).collect();
        Ok(Self { samples, normalization })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn resolution(&self) -> usize {
        self.samples.len() - 1
    }

    /// `∫ρ` by the trapezoid rule on the stored samples.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.samples)
    }

    /// `∫ z ρ(z) dz`.
    pub fn first_moment(&self) -> f64 {
        let n = self.resolution();
        let zs: Vec<f64> = self.samples.iter().enumerate().map(|(k, v)| v * k as f64 / n as f64).collect();
        trapezoid(&zs)
    }

    /// Convolution weights for a kernel spread over `m` grid steps.
    ///
    /// `w_k = ∫ ρ(z) φ_k(m z) dz` with `φ_k` the hat function centred at `k`,
    /// so `Σ_k w_k f(t − k h)` integrates the piecewise-linear interpolant of
    /// `f` against `ρ` exactly (up to the kernel quadrature). The weights are
    /// rescaled to sum to one.
    pub fn weights(&self, m: usize) -> Vec<f64> {
        let n = self.resolution();
        let mut w = vec![0.0; m + 1];
        for (j, rho) in self.samples.iter().enumerate() {
            let q = if j == 0 || j == n { 0.5 } else { 1.0 } * rho / n as f64;
            let pos = j as f64 / n as f64 * m as f64;
            let k = (pos.floor() as usize).min(m.saturating_sub(1));
            let frac = pos - k as f64;
            w[k] += q * (1.0 - frac);
            if m > 0 {
                w[k + 1] += q * frac;
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    }
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::bump()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_integrates_to_one() {
        let k = MollifierKernel::bump();
        assert!((k.mass() - 1.0).abs() < 1e-8);
        assert!(k.samples().iter().all(|v| *v >= 0.0));
        assert_eq!(k.samples()[0], 0.0);
        assert_eq!(*k.samples().last().unwrap(), 0.0);
        // symmetric about 1/2
        assert!((k.first_moment() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn weights_sum_to_one_and_reproduce_the_moment() {
        let k = MollifierKernel::bump();
        for m in [1, 2, 3, 7, 40] {
            let w = k.weights(m);
            assert_eq!(w.len(), m + 1);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let moment: f64 = w.iter().enumerate().map(|(i, v)| v * i as f64 / m as f64).sum();
            assert!((moment - k.first_moment()).abs() < 1e-9, "m = {m}");
        }
    }

    #[test]
    fn custom_kernel_validation() {
        assert!(MollifierKernel::from_fn(|z| z - 0.5, 100).is_err());
        assert!(MollifierKernel::from_fn(|_| 0.0, 100).is_err());
        let k = MollifierKernel::from_fn(|_| 3.0, 100).unwrap();
        assert!((k.normalization() - 1.0 / 3.0).abs() < 1e-15);
    }
}
