use rdde_core::checks::{
    a_priori_regression, additivity_residual, chen_residual, cocycle_residual, integral_order, stability_ratios,
    superposition_residual, PropertyCheck,
};
use serde::Serialize;

use crate::config::{DriverSpec, ExperimentConfig};
use crate::output::{json_document, Header};

use super::driver_for;

pub const INSTANCES: usize = 100;
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<PropertyCheck>,
    pub integral_order_r_squared: f64,
    pub a_priori_slope: f64,
    pub passed: bool,
}

pub fn checks(cfg: &ExperimentConfig) -> anyhow::Result<VerifyReport> {
    let s = cfg.seed;
    let mut checks = vec![
        PropertyCheck::at_most("chen", chen_residual(INSTANCES, s)?, EXACT_TOLERANCE),
        PropertyCheck::at_most("additivity", additivity_residual(INSTANCES, s + 1)?, EXACT_TOLERANCE),
        PropertyCheck::at_most("cocycle", cocycle_residual(INSTANCES, s + 2)?, EXACT_TOLERANCE),
        PropertyCheck::at_most("superposition", superposition_residual(INSTANCES, s + 3)?, EXACT_TOLERANCE),
    ];
    let solver = cfg.solver()?;
    let drp = driver_for(cfg, s, DriverSpec::Ito)?;
    let ratios = stability_ratios(&solver, &drp, s, &[1e-1, 1e-2, 1e-3, 1e-4], &cfg.params)?;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    checks.push(PropertyCheck::at_most("stability_ratio_spread", hi / lo, 10.0));
    let (fit, resid) = a_priori_regression(INSTANCES, s, &cfg.params)?;
    checks.push(PropertyCheck::at_least("a_priori_slope", fit.slope, f64::MIN_POSITIVE));
    checks.push(PropertyCheck::at_most("a_priori_max_residual", resid, 5.0));
    let order = integral_order(s, 0.45, 14, 3..=9)?;
    checks.push(PropertyCheck::at_least("integral_order_slope", order.fit.slope, 3.0 * 0.45 - 0.1));
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, integral_order_r_squared: order.fit.r_squared, a_priori_slope: fit.slope, passed })
}

/// Returns the JSON report and whether every check passed.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<(String, bool)> {
    let report = checks(cfg)?;
    Ok((json_document(&Header::new("verify", cfg), &report), report.passed))
}
