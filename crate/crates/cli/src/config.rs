use std::path::{Path, PathBuf};

use ndarray::Array3;
use rdde_core::drivers::{DriverConfig, DriverKind};
use rdde_core::lyapunov::NormKind;
use rdde_core::solver::{
    solve_linear_step, solve_nonlinear_step, ConstantField, FixedPointConfig, LinearDelayField, SmoothDelayField,
    StepSolver, TanhField,
};
use rdde_core::{DelayedRoughPath, HoelderParams, Segment};
use serde::{Deserialize, Serialize};

/// A configuration problem, tied to the offending field.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config")]
    Parse(#[from] serde_json::Error),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// `σ`, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `dy = y_{t−r} dB` in one dimension.
    ScalarPureDelay,
    /// `σ(y, z) = σ₁ y + σ₂ z`; `sigma1[a][b][k]` is the `(a, b)` entry of the
    /// `k`-th noise matrix.
    Linear { sigma1: Vec<Vec<Vec<f64>>>, sigma2: Vec<Vec<Vec<f64>>> },
    /// `σ(y, z) = scale · tanh(σ₁ y + σ₂ z)`.
    Tanh { sigma1: Vec<Vec<Vec<f64>>>, sigma2: Vec<Vec<Vec<f64>>>, scale: f64 },
    /// `σ ≡ value` (row-major `w × d`).
    Constant { state_dim: usize, value: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriverSpec {
    Ito,
    Stratonovich,
    Mollified { epsilon: f64 },
}

/// Everything a run depends on. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Noise dimension `d`.
    pub dim: usize,
    /// The delay `r`.
    pub delay: f64,
    pub delay_steps: usize,
    pub refine: usize,
    /// Solution windows after time 0.
    pub segments: usize,
    pub params: HoelderParams,
    pub field: FieldSpec,
    pub driver: DriverSpec,
    pub exact_ito_diagonal: bool,
    /// Constant initial history, one value per state component.
    pub initial: Vec<f64>,
    pub fixed_point: FixedPointConfig,
    pub norms: Vec<NormKind>,
    /// Number of Lyapunov exponents.
    pub k: usize,
    /// Delay windows for the Lyapunov iteration.
    pub n_steps: usize,
    pub epsilon_ladder: Vec<f64>,
    /// Hölder exponent of the Wong–Zakai driver distances.
    pub distance_gamma: f64,
    /// Seeds `seed, seed + 1, …` for the Monte Carlo commands.
    pub seeds: usize,
    /// Largest truncation index of the no-semiflow series.
    pub n_max: usize,
    /// Truncations up to this index also get the Riemann-sum Young integral.
    pub young_max: usize,
    pub young_step: f64,
    /// Seeds in the no-semiflow Monte Carlo mean.
    pub mc_seeds: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 1,
            delay: 1.0,
            delay_steps: 10,
            refine: 64,
            segments: 4,
            params: HoelderParams::default(),
            field: FieldSpec::ScalarPureDelay,
            driver: DriverSpec::Ito,
            exact_ito_diagonal: false,
            initial: vec![1.0],
            fixed_point: FixedPointConfig::default(),
            norms: vec![NormKind::M2],
            k: 1,
            n_steps: 200,
            epsilon_ladder: vec![0.2, 0.1, 0.05, 0.025],
            distance_gamma: 0.34,
            seeds: 1,
            n_max: 10_000,
            young_max: 50,
            young_step: 1e-4,
            mc_seeds: 1000,
            output: None,
        }
    }
}

fn to_array3(name: &'static str, m: &[Vec<Vec<f64>>], w: usize, d: usize) -> Result<Array3<f64>, ConfigError> {
    if m.len() != w || m.iter().any(|r| r.len() != w || r.iter().any(|c| c.len() != d)) {
        return Err(bad(name, format!("expected a {w} x {w} x {d} nested array")));
    }
    Ok(Array3::from_shape_fn((w, w, d), |(a, b, k)| m[a][b][k]))
}

impl FieldSpec {
    pub fn state_dim(&self) -> usize {
        match self {
            FieldSpec::ScalarPureDelay => 1,
            FieldSpec::Linear { sigma1, .. } | FieldSpec::Tanh { sigma1, .. } => sigma1.len(),
            FieldSpec::Constant { state_dim, .. } => *state_dim,
        }
    }
}

/// A field together with the step solver suited to it.
pub enum FieldSolver {
    Linear(LinearDelayField),
    Nonlinear(Box<dyn SmoothDelayField>, FixedPointConfig),
}

impl StepSolver for FieldSolver {
    fn field(&self) -> &dyn SmoothDelayField {
        match self {
            FieldSolver::Linear(f) => f,
            FieldSolver::Nonlinear(f, _) => f.as_ref(),
        }
    }

    fn step(&self, xi: &Segment, drp: &DelayedRoughPath, s: usize) -> rdde_core::Result<Segment> {
        match self {
            FieldSolver::Linear(f) => solve_linear_step(xi, f, drp, s),
            FieldSolver::Nonlinear(f, fp) => solve_nonlinear_step(xi, f.as_ref(), drp, s, fp),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// One-line JSON echo for output headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dim == 0 {
            return Err(bad("dim", "must be at least 1"));
        }
        if !(self.delay > 0.0 && self.delay.is_finite()) {
            return Err(bad("delay", "must be positive"));
        }
        if self.delay_steps == 0 {
            return Err(bad("delay_steps", "must be at least 1"));
        }
        if self.refine == 0 {
            return Err(bad("refine", "must be at least 1"));
        }
        if self.segments == 0 {
            return Err(bad("segments", "must be at least 1"));
        }
        self.params.validate().map_err(|e| bad("params", e.to_string()))?;
        self.fixed_point.validate().map_err(|e| bad("fixed_point", e.to_string()))?;
        let w = self.field.state_dim();
        if w == 0 {
            return Err(bad("field", "state dimension must be at least 1"));
        }
        if self.initial.len() != w {
            return Err(bad("initial", format!("needs {w} values (the field's state dimension), got {}", self.initial.len())));
        }
        self.solver()?;
        if let DriverSpec::Mollified { epsilon } = self.driver {
            self.driver_config(self.seed, self.driver).snapped_epsilon().map_err(|e| bad("driver", e.to_string()))?;
            if !(epsilon > 0.0) {
                return Err(bad("driver", "epsilon must be positive"));
            }
        }
        if self.norms.is_empty() {
            return Err(bad("norms", "list at least one norm"));
        }
        for n in &self.norms {
            n.validate().map_err(|e| bad("norms", e.to_string()))?;
        }
        if !(1..=8).contains(&self.k) {
            return Err(bad("k", "must lie in 1..=8"));
        }
        if self.n_steps == 0 {
            return Err(bad("n_steps", "must be at least 1"));
        }
        if self.epsilon_ladder.is_empty() || self.epsilon_ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(bad("epsilon_ladder", "must be a nonempty list of positive scales"));
        }
        if self.epsilon_ladder.iter().any(|e| *e > self.delay) {
            return Err(bad("epsilon_ladder", "scales must not exceed the delay"));
        }
        if !(self.distance_gamma > 1.0 / 3.0 && self.distance_gamma <= 0.5) {
            return Err(bad("distance_gamma", "must lie in (1/3, 1/2]"));
        }
        if self.seeds == 0 {
            return Err(bad("seeds", "must be at least 1"));
        }
        if self.mc_seeds == 0 {
            return Err(bad("mc_seeds", "must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(bad("n_max", "must be at least 1"));
        }
        if !(self.young_step > 0.0 && self.young_step < 1.0) {
            return Err(bad("young_step", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<FieldSolver, ConfigError> {
        let d = self.dim;
        Ok(match &self.field {
            FieldSpec::ScalarPureDelay => {
                if d != 1 {
                    return Err(bad("field", "scalar-pure-delay needs dim = 1"));
                }
                FieldSolver::Linear(LinearDelayField::pure_delay())
            }
            FieldSpec::Linear { sigma1, sigma2 } => {
                let w = sigma1.len();
                let f = LinearDelayField::new(to_array3("field.sigma1", sigma1, w, d)?, to_array3("field.sigma2", sigma2, w, d)?)
                    .map_err(|e| bad("field", e.to_string()))?;
                FieldSolver::Linear(f)
            }
            FieldSpec::Tanh { sigma1, sigma2, scale } => {
                let w = sigma1.len();
                let lin = LinearDelayField::new(to_array3("field.sigma1", sigma1, w, d)?, to_array3("field.sigma2", sigma2, w, d)?)
                    .map_err(|e| bad("field", e.to_string()))?;
                let f = TanhField::new(lin, *scale).map_err(|e| bad("field", e.to_string()))?;
                FieldSolver::Nonlinear(Box::new(f), self.fixed_point)
            }
            FieldSpec::Constant { state_dim, value } => {
                if value.len() != state_dim * d {
                    return Err(bad("field.value", format!("needs state_dim * dim = {} entries", state_dim * d)));
                }
                let f = ConstantField::new(*state_dim, value.clone()).map_err(|e| bad("field", e.to_string()))?;
                FieldSolver::Nonlinear(Box::new(f), self.fixed_point)
            }
        })
    }

    pub fn driver_config(&self, seed: u64, spec: DriverSpec) -> DriverConfig {
        let kind = match spec {
            DriverSpec::Ito => DriverKind::Ito,
            DriverSpec::Stratonovich => DriverKind::Stratonovich,
            DriverSpec::Mollified { epsilon } => DriverKind::Mollified { epsilon },
        };
        let mut c = DriverConfig::new(self.dim, self.delay_steps, self.segments)
            .with_refine(self.refine)
            .with_seed(seed)
            .with_delay(self.delay)
            .with_kind(kind);
        c.exact_ito_diagonal = self.exact_ito_diagonal;
        c.gamma = self.params.gamma;
        c
    }

    /// The constant initial history on the first window of `drp`.
    pub fn initial_history(&self, drp: &DelayedRoughPath) -> rdde_core::Result<Segment> {
        Segment::constant(0, drp.grid().step(), self.delay_steps, &self.initial, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&c.to_json_line()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 7, "driver": {"mollified": {"epsilon": 0.1}}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.driver, DriverSpec::Mollified { epsilon: 0.1 });
        assert_eq!(c.delay_steps, 10);
    }

    #[test]
    fn field_level_messages() {
        let c = ExperimentConfig { initial: vec![1.0, 2.0], ..Default::default() };
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("`initial`"), "{e}");
        let c = ExperimentConfig { k: 9, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("`k`"));
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"field": {"type": "linear", "sigma1": [[[1.0, 2.0]]], "sigma2": [[[0.0]]]}}"#,
        )
        .unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("field.sigma1"));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sede": 1}"#).is_err());
    }

    #[test]
    fn too_small_epsilon_is_rejected() {
        let c = ExperimentConfig { driver: DriverSpec::Mollified { epsilon: 1e-5 }, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("`driver`"));
    }
}
