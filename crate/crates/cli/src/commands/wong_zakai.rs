use rayon::prelude::*;
use rdde_core::drivers::homogeneous_distance;
use rdde_core::rough::rho_distance;
use rdde_core::stats::spearman;
use serde::Serialize;

use crate::config::{DriverSpec, ExperimentConfig, FieldSolver};
use crate::output::{fmt_f64, Cell, Csv, Header};

use super::{driver_for, trajectory};

/// One `(seed, ε)` comparison against the Stratonovich lift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WzRow {
    pub seed: u64,
    pub epsilon: f64,
    pub snapped_epsilon: f64,
    pub rho: f64,
    pub homogeneous: f64,
    /// Largest difference between the two solutions over the horizon.
    pub sup_gap: f64,
}

/// What one seed produced: rows for usable scales, and scales below the fine
/// step that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub rows: Vec<WzRow>,
    pub skipped: Vec<f64>,
}

fn sup_gap(a: &[rdde_core::Segment], b: &[rdde_core::Segment]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.values().iter().zip(y.values().iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

pub fn run_seed(cfg: &ExperimentConfig, solver: &FieldSolver, seed: u64) -> anyhow::Result<SeedResult> {
    let strat = driver_for(cfg, seed, DriverSpec::Stratonovich)?;
    let reference = trajectory(cfg, solver, &strat)?;
    let fine = cfg.driver_config(seed, DriverSpec::Ito).fine_step();
    let mut out = SeedResult { rows: Vec::new(), skipped: Vec::new() };
    for &eps in &cfg.epsilon_ladder {
        if eps < fine {
            out.skipped.push(eps);
            continue;
        }
        let spec = DriverSpec::Mollified { epsilon: eps };
        let snapped = cfg.driver_config(seed, spec).snapped_epsilon()?.unwrap_or(eps);
        let moll = driver_for(cfg, seed, spec)?;
        let sol = trajectory(cfg, solver, &moll)?;
        out.rows.push(WzRow {
            seed,
            epsilon: eps,
            snapped_epsilon: snapped,
            rho: rho_distance(&moll, &strat, cfg.distance_gamma)?,
            homogeneous: homogeneous_distance(&moll, &strat, cfg.distance_gamma)?,
            sup_gap: sup_gap(&sol, &reference),
        });
    }
    Ok(out)
}

/// Cross-seed summary of a ladder run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WzSummary {
    pub seeds: usize,
    /// Share of seeds whose homogeneous distance weakly decreases down the ladder.
    pub distance_monotone: f64,
    pub gap_monotone: f64,
    /// Share of seeds where both do.
    pub both_monotone: f64,
    /// Rank correlation of homogeneous distance and sup gap over all rows.
    pub spearman: f64,
}

fn non_increasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn summarize(results: &[SeedResult]) -> WzSummary {
    let n = results.len().max(1) as f64;
    let (mut d, mut g, mut both) = (0usize, 0usize, 0usize);
    for r in results {
        let dm = non_increasing(r.rows.iter().map(|x| x.homogeneous));
        let gm = non_increasing(r.rows.iter().map(|x| x.sup_gap));
        d += usize::from(dm);
        g += usize::from(gm);
        both += usize::from(dm && gm);
    }
    let rows: Vec<&WzRow> = results.iter().flat_map(|r| &r.rows).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.homogeneous).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_gap).collect();
    WzSummary {
        seeds: results.len(),
        distance_monotone: d as f64 / n,
        gap_monotone: g as f64 / n,
        both_monotone: both as f64 / n,
        spearman: spearman(&xs, &ys),
    }
}

/// Seeds `seed, …, seed + seeds − 1`, run in parallel, reported in seed order.
pub fn run_all(cfg: &ExperimentConfig) -> anyhow::Result<Vec<SeedResult>> {
    let solver = cfg.solver()?;
    (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|i| run_seed(cfg, &solver, cfg.seed + i))
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let results = run_all(cfg)?;
    let mut header = Header::new("wong-zakai", cfg);
    if let Some(first) = results.first() {
        for r in &first.rows {
            header = header.snap(&format!("epsilon {}", fmt_f64(r.epsilon)), r.snapped_epsilon);
        }
    }
    let mut csv = Csv::new(&header, &["seed", "epsilon", "snapped_epsilon", "rho", "homogeneous_distance", "sup_gap"]);
    if let Some(first) = results.first() {
        for e in &first.skipped {
            csv.comment(&format!("skipped epsilon {}: below the fine step", fmt_f64(*e)));
        }
    }
    for r in results.iter().flat_map(|s| &s.rows) {
        csv.row(&[
            Cell::U(r.seed),
            Cell::F(r.epsilon),
            Cell::F(r.snapped_epsilon),
            Cell::F(r.rho),
            Cell::F(r.homogeneous),
            Cell::F(r.sup_gap),
        ]);
    }
    let s = summarize(&results);
    csv.comment(&format!(
        "summary: seeds={} distance_monotone={} gap_monotone={} both_monotone={} spearman={}",
        s.seeds,
        fmt_f64(s.distance_monotone),
        fmt_f64(s.gap_monotone),
        fmt_f64(s.both_monotone),
        fmt_f64(s.spearman)
    ));
    Ok(csv.finish())
}
