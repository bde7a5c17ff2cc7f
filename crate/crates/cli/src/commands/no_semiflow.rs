//! The series `S_N = ∫₀¹ B̃^N_{t−1} dB^N_t = Σ_{n ≤ N} Z_n² / a_n`,
//! `a_n = (n − 1/2)π`, which grows without bound: the integral has no limit
//! as the truncations refine, so the equation driven by these paths has no
//! continuous semi-flow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

use crate::config::ExperimentConfig;
use crate::output::{Cell, Csv, Header};

const CHUNK: usize = 50;

fn freq(n: usize) -> f64 {
    (n as f64 - 0.5) * PI
}

/// `Z_1, …, Z_{n_max}` for one seed.
pub fn draw(seed: u64, n_max: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_max).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `S_1, …, S_{n_max}`.
pub fn partial_sums(z: &[f64]) -> Vec<f64> {
    z.iter()
        .enumerate()
        .scan(0.0, |acc, (i, v)| {
            *acc += v * v / freq(i + 1);
            Some(*acc)
        })
        .collect()
}

/// `Σ_{n ≤ N} 1/a_n` for `N = 1..=n_max`.
pub fn analytic_means(n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .scan(0.0, |acc, n| {
            *acc += 1.0 / freq(n);
            Some(*acc)
        })
        .collect()
}

/// Trapezoid Riemann sums of `∫₀¹ B̃^N_{t−1} dB^N_t` on a uniform grid of
/// step close to `step`, for `N = 1..=n_max`. Here
/// `B^N_t = √2 Σ Z_n sin(a_n t)/a_n` and `B̃^N` uses `Z̃_n = (−1)ⁿ Z_n`.
pub fn young_integrals(z: &[f64], n_max: usize, step: f64) -> Vec<f64> {
    let k = (1.0 / step).round().max(1.0) as usize;
    let h = 1.0 / k as f64;
    let mut b = vec![0.0; k + 1];
    let mut bt = vec![0.0; k + 1];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max.min(z.len()) {
        let a = freq(n);
        let zt = if n % 2 == 0 { z[n - 1] } else { -z[n - 1] };
        for i in 0..=k {
            let t = i as f64 * h;
            b[i] += SQRT_2 * z[n - 1] * (a * t).sin() / a;
            bt[i] += SQRT_2 * zt * (a * (t - 1.0)).sin() / a;
        }
        let s: f64 = (0..k).map(|i| 0.5 * (bt[i] + bt[i + 1]) * (b[i + 1] - b[i])).sum();
        out.push(s);
    }
    out
}

/// Per-`N` mean and minimum of `S_N` over seeds `first, …, first + seeds − 1`.
/// Chunking is fixed, so the sums do not depend on the thread count.
pub fn monte_carlo(first: u64, seeds: usize, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let starts: Vec<usize> = (0..seeds).step_by(CHUNK).collect();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = starts
        .par_iter()
        .map(|&s0| {
            let mut sum = vec![0.0; n_max];
            let mut min = vec![f64::INFINITY; n_max];
            for j in s0..(s0 + CHUNK).min(seeds) {
                let s = partial_sums(&draw(first + j as u64, n_max));
                for i in 0..n_max {
                    sum[i] += s[i];
                    min[i] = min[i].min(s[i]);
                }
            }
            (sum, min)
        })
        .collect();
    let mut sum = vec![0.0; n_max];
    let mut min = vec![f64::INFINITY; n_max];
    for (ps, pm) in parts {
        for i in 0..n_max {
            sum[i] += ps[i];
            min[i] = min[i].min(pm[i]);
        }
    }
    sum.iter_mut().for_each(|v| *v /= seeds as f64);
    (sum, min)
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let n_max = cfg.n_max;
    let z = draw(cfg.seed, n_max);
    let s = partial_sums(&z);
    let young = young_integrals(&z, cfg.young_max.min(n_max), cfg.young_step);
    let analytic = analytic_means(n_max);
    let (mc_mean, mc_min) = monte_carlo(cfg.seed, cfg.mc_seeds, n_max);
    let h = 1.0 / (1.0 / cfg.young_step).round().max(1.0);
    let header = Header::new("no-semiflow", cfg).snap("young_step", h);
    let mut csv = Csv::new(&header, &["N", "S_N", "young", "analytic_mean", "mc_mean", "mc_min"]);
    for i in 0..n_max {
        csv.row(&[
            Cell::U(i as u64 + 1),
            Cell::F(s[i]),
            young.get(i).map_or(Cell::S(String::new()), |v| Cell::F(*v)),
            Cell::F(analytic[i]),
            Cell::F(mc_mean[i]),
            Cell::F(mc_min[i]),
        ]);
    }
    Ok(csv.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn young_matches_closed_form() {
        let z = draw(4, 20);
        let s = partial_sums(&z);
        let y = young_integrals(&z, 20, 1e-4);
        for n in 0..20 {
            assert!(((y[n] - s[n]) / s[n]).abs() < 1e-2, "N={} young {} closed {}", n + 1, y[n], s[n]);
        }
    }

    #[test]
    fn partial_sums_increase() {
        let s = partial_sums(&draw(1, 500));
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn chunking_is_thread_independent() {
        let a = monte_carlo(0, 120, 30);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| monte_carlo(0, 120, 30));
        assert_eq!(a, b);
    }
}
