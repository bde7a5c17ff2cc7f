use rdde_core::lyapunov::{benettin_spectrum, norm_independence_report, SpectrumEstimate};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{json_document, Cell, Csv, Header};

use super::driver_for;

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub estimates: Vec<SpectrumEstimate>,
    /// Largest pairwise `λ_1` gap across norms and its combined half-width.
    pub lambda1_spread: Option<(f64, f64)>,
}

pub fn estimate(cfg: &ExperimentConfig) -> anyhow::Result<LyapunovReport> {
    if cfg.segments < cfg.n_steps {
        anyhow::bail!(crate::config::ConfigError::Invalid {
            field: "segments",
            message: format!("must be at least n_steps = {}", cfg.n_steps),
        });
    }
    let solver = cfg.solver()?;
    let drp = driver_for(cfg, cfg.seed, cfg.driver)?;
    Ok(if cfg.norms.len() == 1 {
        LyapunovReport {
            estimates: vec![benettin_spectrum(&solver, &drp, cfg.k, cfg.n_steps, cfg.norms[0], cfg.seed)?],
            lambda1_spread: None,
        }
    } else {
        let r = norm_independence_report(&solver, &drp, cfg.k, cfg.n_steps, cfg.seed, &cfg.norms)?;
        let spread = r.lambda1_spread();
        LyapunovReport { estimates: r.estimates, lambda1_spread: Some(spread) }
    })
}

/// Returns the JSON report and the per-step log-volume CSV.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<(String, String)> {
    let report = estimate(cfg)?;
    let header = Header::new("lyapunov", cfg);
    let json = json_document(&header, &report);
    let mut cols = vec!["norm".to_string(), "step".to_string()];
    cols.extend((1..=cfg.k).map(|j| format!("log_vol_{j}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header, &cols);
    for e in &report.estimates {
        for (n, row) in e.per_step_log_vol.iter().enumerate() {
            let mut cells = vec![Cell::S(e.norm.label()), Cell::U(n as u64 + 1)];
            cells.extend(row.iter().map(|v| Cell::F(*v)));
            csv.row(&cells);
        }
    }
    Ok((json, csv.finish()))
}
