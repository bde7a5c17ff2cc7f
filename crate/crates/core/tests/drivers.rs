use rdde_core::drivers::{
    build_driver, homogeneous_distance, lift_ito, lift_piecewise_linear, mollified_brownian, mollify,
    sample_brownian, sample_brownian_with_history, to_stratonovich, DriverConfig, DriverKind, MollifierKernel,
};
use rdde_core::rough::rho_distance;
use rayon::prelude::*;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn brownian_variance_and_independence() {
    let cfg = DriverConfig::new(1, 4, 1).with_refine(4);
    let samples: Vec<(f64, f64, f64)> = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let b = sample_brownian(&cfg.clone().with_seed(seed)).unwrap();
            let v = b.values();
            // grid on [−1, 1] with 16 fine steps per unit: 0 ↦ 16, ½ ↦ 24, 1 ↦ 32
            (v[[32, 0]], v[[24, 0]] - v[[16, 0]], v[[32, 0]] - v[[24, 0]])
        })
        .collect();
    let b1: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (_, sd) = mean_sd(&b1);
    let var = sd * sd;
    assert!((0.94..=1.06).contains(&var), "Var(B_1) = {var}");
    let x: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let (mx, sx) = mean_sd(&x);
    let (my, sy) = mean_sd(&y);
    let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0);
    let corr = cov / (sx * sy);
    assert!(corr.abs() < 0.05, "corr = {corr}");
}

#[test]
fn delayed_area_has_zero_mean() {
    let cfg = DriverConfig::new(2, 4, 1).with_refine(16);
    let vals: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let p = lift_ito(&cfg.clone().with_seed(seed)).unwrap();
            p.reconstruct_delayed_area(4, 8).unwrap()[[0, 1]]
        })
        .collect();
    let (m, sd) = mean_sd(&vals);
    let se = sd / (vals.len() as f64).sqrt();
    assert!(m.abs() < 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn ito_diagonal_matches_ito_formula() {
    let cfg = DriverConfig::new(2, 5, 2).with_refine(64).with_seed(17);
    let p = lift_ito(&cfg).unwrap();
    let hf = cfg.fine_step();
    let tol = 5.0 * hf.powf(0.4);
    for j in 0..p.grid().last_index() {
        let a = p.step_area(j);
        let inc = p.increment(j, j + 1);
        for i in 0..2 {
            let exact = 0.5 * inc[i] * inc[i] - 0.5 * p.grid().step();
            assert!((a[[i, i]] - exact).abs() < tol);
        }
    }
    let mut exact_cfg = cfg.clone();
    exact_cfg.exact_ito_diagonal = true;
    let q = lift_ito(&exact_cfg).unwrap();
    let inc = q.increment(3, 4);
    assert!((q.step_area(3)[[1, 1]] - 0.5 * (inc[1] * inc[1] - q.grid().step())).abs() < 1e-15);
    assert_eq!(q.step_area(3)[[0, 1]], p.step_area(3)[[0, 1]]);
}

#[test]
fn stratonovich_symmetric_part_and_delayed_bytes() {
    let cfg = DriverConfig::new(3, 4, 2).with_refine(128).with_seed(2);
    let ito = lift_ito(&cfg).unwrap();
    let strat = to_stratonovich(&ito).unwrap();
    let tol = 5.0 * cfg.fine_step().powf(0.4);
    for j in 0..strat.grid().last_index() {
        let a = strat.step_area(j);
        let inc = strat.increment(j, j + 1);
        for i in 0..3 {
            for k in 0..3 {
                let sym = 0.5 * (a[[i, k]] + a[[k, i]]);
                assert!((sym - 0.5 * inc[i] * inc[k]).abs() < tol);
            }
        }
    }
    let (_, _, _, d_ito) = ito.raw_parts();
    let (_, _, _, d_strat) = strat.raw_parts();
    let bytes = |a: ndarray::ArrayView3<f64>| a.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>();
    assert_eq!(bytes(d_ito), bytes(d_strat));
}

#[test]
fn ito_stratonovich_distance_is_the_diagonal_term() {
    let cfg = DriverConfig::new(2, 8, 2).with_refine(4).with_seed(5);
    let ito = lift_ito(&cfg).unwrap();
    let strat = to_stratonovich(&ito).unwrap();
    let gamma = 0.4;
    // sup over (s,t) of ½(t−s)√d / (t−s)^{2γ}: attained at the longest interval
    let len = (ito.grid().last_index() - ito.delay_steps()) as f64 * ito.grid().step();
    let expected = 0.5 * 2f64.sqrt() * len.powf(1.0 - 2.0 * gamma);
    let got = rho_distance(&ito, &strat, gamma).unwrap();
    assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
}

#[test]
fn mollification_error_decreases_with_epsilon() {
    let kernel = MollifierKernel::bump();
    for seed in 0..5 {
        let cfg = DriverConfig::new(1, 20, 1).with_refine(32).with_seed(seed);
        let b = sample_brownian(&cfg).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let (be, _) = mollified_brownian(&cfg, eps, &kernel).unwrap();
            let err = (be.values() - b.values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < last, "seed {seed}, eps {eps}: {err} ≥ {last}");
            last = err;
        }
    }
}

#[test]
fn wong_zakai_distance_mostly_decreases() {
    // a lighter version of the acceptance run
    let ladder = [0.2, 0.1, 0.05, 0.025];
    let hits: usize = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let base = DriverConfig::new(1, 10, 4).with_refine(32).with_seed(seed);
            let strat = build_driver(&base.clone().with_kind(DriverKind::Stratonovich)).unwrap();
            let ds: Vec<f64> = ladder
                .iter()
                .map(|&eps| {
                    let m = build_driver(&base.clone().with_kind(DriverKind::Mollified { epsilon: eps })).unwrap();
                    homogeneous_distance(&m, &strat, 0.34).unwrap()
                })
                .collect();
            usize::from(ds.windows(2).all(|w| w[1] <= w[0]))
        })
        .sum();
    assert!(hits >= 16, "{hits}/20 monotone");
}

#[test]
fn pathwise_identity_for_the_mollified_delayed_area() {
    // ∫_s^t B^ε_{s−r,u−r} dB^ε_u  =  ∫ρ(z) ∫_{s−εz}^{t−εz} B^ε_{s−r,u+εz−r} dB_u dz
    let cfg = DriverConfig::new(2, 10, 2).with_refine(16).with_seed(23);
    let kernel = MollifierKernel::bump();
    let eps = 0.1;
    let nf = cfg.delay_steps * cfg.refine;
    let (m, snapped) = rdde_core::drivers::snap_epsilon(eps, cfg.fine_step(), cfg.delay).unwrap();
    let ext = sample_brownian_with_history(&cfg, nf).unwrap();
    let smooth = mollify(&ext, snapped, &kernel).unwrap();
    // both on the same fine grid over [−r, T], up to the additive constant
    let be = smooth.tail(nf - m).unwrap();
    let b = ext.tail(nf).unwrap();
    let lifted = lift_piecewise_linear(&be, cfg.delay_steps, 0.45).unwrap();
    let w = kernel.weights(m);
    let (bv, bev) = (b.values(), be.values());
    let (s, t) = (14usize, 23usize);
    let (fs, ft) = (s * cfg.refine, t * cfg.refine);
    let lhs = lifted.reconstruct_delayed_area(s, t).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let mut rhs = 0.0;
            for (k, wk) in w.iter().enumerate() {
                for l in (fs - k)..(ft - k) {
                    // B^ε_{s−r, u+εz−r} at both ends of the fine piece, trapezoid rule
                    let left = bev[[l + k - nf, i]] - bev[[fs - nf, i]];
                    let right = bev[[l + 1 + k - nf, i]] - bev[[fs - nf, i]];
                    rhs += wk * 0.5 * (left + right) * (bv[[l + 1, j]] - bv[[l, j]]);
                }
            }
            assert!((lhs[[i, j]] - rhs).abs() < 1e-4, "({i},{j}): {} vs {rhs}", lhs[[i, j]]);
        }
    }
}

#[test]
fn drivers_are_independent_of_thread_count() {
    let cfg = DriverConfig::new(2, 6, 2).with_refine(8);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (0..16u64)
                .into_par_iter()
                .map(|seed| {
                    let p = build_driver(&cfg.clone().with_seed(seed)).unwrap();
                    let (_, x, a, d) = p.raw_parts();
                    x.iter().chain(a.iter()).chain(d.iter()).map(|v| v.to_bits()).collect::<Vec<u64>>()
                })
                .collect::<Vec<_>>()
        })
    };
    assert_eq!(run(1), run(4));
}
