mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regp::ego::{quantile_type7, HeuristicKind};
use regp::kernel::gram_matrix;
use regp::linalg::symmetric_eigenvalues;
use regp::{
    build_candidate_grid, build_constraints, fit_mle, fit_regp, gamma, gram_cholesky,
    negative_log_likelihood, posterior, relax_fixed_params, select_relaxation, tcrps,
    tcrps_divergence, validation_threshold, Dataset, FitConfig, GpParams, GridKind,
    HeuristicConfig, RelaxationSet, ScoreRange, Smoothness,
};

fn spread_points(seed: u64, n: usize, d: usize, min_dist: f64) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    while pts.len() < n {
        let p: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        if pts
            .iter()
            .all(|q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= min_dist)
        {
            pts.push(p);
        }
    }
    pts
}

fn test_values(pts: &[Vec<f64>], seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    pts.iter()
        .map(|p| {
            let s: f64 = p.iter().enumerate().map(|(j, v)| ((j + 2) as f64 * v).sin()).sum();
            5.0 * s * s + r.random_range(-0.5..0.5)
        })
        .collect()
}

fn smoothness() -> impl Strategy<Value = Smoothness> {
    prop_oneof![
        Just(Smoothness::Half),
        Just(Smoothness::ThreeHalves),
        Just(Smoothness::FiveHalves),
        Just(Smoothness::Infinite),
    ]
}

fn score_range() -> impl Strategy<Value = ScoreRange> {
    (-3.0..3.0f64, 0.1..4.0f64, 0usize..4).prop_map(|(a, w, kind)| match kind {
        0 => ScoreRange::interval(a, a + w).unwrap(),
        1 => ScoreRange::below(a),
        2 => ScoreRange::above(a),
        _ => ScoreRange::real_line(),
    })
}

proptest! {
    #[test]
    fn gamma_non_decreasing(z in -5.0..5.0f64, s in 0.0..4.0f64, dz in 0.0..1.0f64, ds in 0.0..1.0f64) {
        let g = gamma(z, s).unwrap();
        prop_assert!(gamma(z + dz, s).unwrap() >= g - 1e-15);
        prop_assert!(gamma(z, s + ds).unwrap() >= g - 1e-15);
    }

    #[test]
    fn gamma_continuous_at_zero_variance(z in -3.0..3.0f64) {
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let s = 10f64.powi(-k);
            let gap = (gamma(z, s).unwrap() - z.max(0.0)).abs();
            prop_assert!(gap <= prev + 1e-15);
            prev = gap;
        }
        prop_assert!(prev < 1e-6);
    }

    #[test]
    fn tcrps_sigma_additive(mean in -3.0..3.0f64, sd in 0.01..3.0f64, z in -5.0..5.0f64,
                            a in -4.0..4.0f64, w1 in 0.01..3.0f64, w2 in 0.01..3.0f64, open in 0usize..3) {
        let (lo, hi) = match open {
            0 => (a, a + w1 + w2),
            1 => (f64::NEG_INFINITY, a + w1 + w2),
            _ => (a, f64::INFINITY),
        };
        let b = a + w1;
        let whole = tcrps(mean, sd, &ScoreRange::interval(lo, hi).unwrap(), z).unwrap().value();
        let left = tcrps(mean, sd, &ScoreRange::interval(lo, b).unwrap(), z).unwrap().value();
        let right = tcrps(mean, sd, &ScoreRange::interval(b, hi).unwrap(), z).unwrap().value();
        prop_assert!((whole - left - right).abs() <= 1e-9, "{whole} vs {left} + {right}");
    }

    #[test]
    fn tcrps_non_negative(mean in -3.0..3.0f64, sd in 0.0..3.0f64, z in -20.0..20.0f64, q in score_range()) {
        prop_assert!(tcrps(mean, sd, &q, z).unwrap().value() >= 0.0);
    }

    #[test]
    fn divergence_non_negative(m1 in -3.0..3.0f64, s1 in 0.05..3.0f64, m2 in -3.0..3.0f64, s2 in 0.05..3.0f64,
                               q in score_range()) {
        prop_assert!(tcrps_divergence(m1, s1, m2, s2, &q) >= 0.0);
    }

    #[test]
    fn tcrps_is_nan_free(mean in -1e3..1e3f64, sd in 0.0..1e3f64, z in -1e4..1e4f64, q in score_range()) {
        prop_assert!(tcrps(mean, sd, &q, z).unwrap().value().is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_positive_semidefinite(seed in any::<u64>(), n in 2usize..=20, d in 1usize..=6,
                                               var in 0.1..10.0f64, rho in 0.05..2.0f64, nu in smoothness()) {
        let pts = spread_points(seed, n, d, 1e-3);
        let data = Dataset::new(pts, vec![0.0; n]).unwrap();
        let params = GpParams::new(0.0, var, vec![rho; d], nu).unwrap();
        let k = gram_matrix(&data, &params);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
        let min = symmetric_eigenvalues(&k).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-8 * var, "min eigenvalue {min}");
    }

    #[test]
    fn posterior_variance_non_increasing_in_n(seed in any::<u64>(), n in 2usize..=12, d in 1usize..=3,
                                              rho in 0.1..0.6f64, nu in prop_oneof![Just(Smoothness::ThreeHalves), Just(Smoothness::FiveHalves)]) {
        let pts = spread_points(seed, n + 1, d, 0.05);
        let params = GpParams::new(0.0, 1.0, vec![rho; d], nu).unwrap();
        let small = Dataset::new(pts[..n].to_vec(), vec![0.0; n]).unwrap();
        let big = Dataset::new(pts.clone(), vec![0.0; n + 1]).unwrap();
        let cs = gram_cholesky(&small, &params).unwrap();
        let cb = gram_cholesky(&big, &params).unwrap();
        let grid = spread_points(seed.wrapping_add(1), 25, d, 0.0);
        for x in &grid {
            let vs = posterior(&small, &params, &cs, x).unwrap().variance;
            let vb = posterior(&big, &params, &cb, x).unwrap().variance;
            prop_assert!(vb <= vs + 1e-8, "{vb} > {vs}");
        }
    }

    #[test]
    fn zero_mean_posterior_is_minimum_norm_interpolant(seed in any::<u64>(), n in 2usize..=12, d in 1usize..=3,
                                                       rho in 0.1..0.8f64) {
        let pts = spread_points(seed, n, d, 0.05);
        let values = test_values(&pts, seed);
        let data = Dataset::new(pts.clone(), values.clone()).unwrap();
        let params = GpParams::new(0.0, 1.3, vec![rho; d], Smoothness::FiveHalves).unwrap();
        let chol = gram_cholesky(&data, &params).unwrap();
        for x in spread_points(seed ^ 7, 10, d, 0.0) {
            let got = posterior(&data, &params, &chol, &x).unwrap().mean;
            let (want, _) = common::krige(&pts, &values, 0.0, 1.3, &vec![rho; d], &x);
            prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
    }

    #[test]
    fn fixed_parameter_relaxation_reduces_norm(seed in any::<u64>(), n in 3usize..=15, d in 1usize..=3,
                                               rho in 0.1..0.6f64, c in -1.0..3.0f64, frac in 0.3..0.9f64) {
        let pts = spread_points(seed, n, d, 0.05);
        let values = test_values(&pts, seed);
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t = sorted[((n - 1) as f64 * frac) as usize];
        let data = Dataset::new(pts.clone(), values.clone()).unwrap();
        let params = GpParams::new(c, 2.0, vec![rho; d], Smoothness::FiveHalves).unwrap();
        let cons = build_constraints(&values, &RelaxationSet::above(t));
        let z = relax_fixed_params(&data, &params, &cons).unwrap();
        prop_assert!(cons.contains(&z));
        let p = common::invert(&common::gram(&pts, 2.0, &vec![rho; d]));
        let norm = |v: &[f64]| common::quad_form(&p, &v.iter().map(|x| x - c).collect::<Vec<_>>());
        prop_assert!(norm(&z) <= norm(&values) + 1e-8 * norm(&values).max(1.0));
    }

    #[test]
    fn quantile_within_sample_range(v in prop::collection::vec(-100.0..100.0f64, 1..40), alpha in 0.0..=1.0f64) {
        let q = quantile_type7(&v, alpha).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= q && q <= hi);
    }

    #[test]
    fn validation_threshold_exceeds_minimum(v in prop::collection::vec(-100.0..100.0f64, 2..40),
                                            n0 in 1usize..10, alpha in 0.01..0.99f64,
                                            conc in any::<bool>()) {
        let kind = if conc { HeuristicKind::Concentration } else { HeuristicKind::Constant };
        let h = HeuristicConfig::new(kind, alpha, 10).unwrap();
        let init = &v[..n0.min(v.len())];
        let t = validation_threshold(&v, &h, init).unwrap();
        let m = v.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(t > m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_fit_is_feasible_and_improves_likelihood(seed in any::<u64>(), n in 6usize..=14, frac in 0.4..0.9f64) {
        let pts = spread_points(seed, n, 2, 0.05);
        let values = test_values(&pts, seed);
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t = sorted[((n - 1) as f64 * frac) as usize];
        let data = Dataset::new(pts, values.clone()).unwrap();
        let set = RelaxationSet::above(t);
        let cfg = FitConfig::default();
        let model = fit_regp(&data, &set, &cfg).unwrap();
        let cons = build_constraints(&values, &set);
        prop_assert!(cons.contains(model.relaxed_values()));
        let at_original = negative_log_likelihood(&data, model.params()).unwrap();
        prop_assert!(model.nll() <= at_original + 1e-6 * at_original.abs().max(1.0));
        let mle = fit_mle(&data, &cfg).unwrap();
        prop_assert!(model.nll() <= mle.nll() + 1e-6 * mle.nll().abs().max(1.0));

        let again = fit_regp(&data, &set, &cfg).unwrap();
        prop_assert_eq!(again.params(), model.params());
        prop_assert_eq!(again.relaxed_values(), model.relaxed_values());
    }

    #[test]
    fn selected_candidate_has_lowest_score(seed in any::<u64>(), n in 6usize..=12) {
        let pts = spread_points(seed, n, 2, 0.05);
        let values = test_values(&pts, seed);
        let data = Dataset::new(pts, values.clone()).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = ScoreRange::below(sorted[n / 4].max(sorted[0] + 1e-3));
        let grid = build_candidate_grid(&values, &q, GridKind::OneSidedMin, 4).unwrap();
        let sel = select_relaxation(&data, &grid, &q, &FitConfig::default()).unwrap();
        let best = sel.scores[sel.chosen_index];
        for &s in sel.scores.iter().filter(|s| s.is_finite()) {
            prop_assert!(best <= s);
        }
    }
}

#[test]
fn tcrps_is_proper_on_a_gaussian_grid() {
    // S(P₁, P₂) = E_{U∼P₂} S(P₁, U) = S(P₂, P₂) + divergence(P₁, P₂).
    let q = ScoreRange::interval(-0.5, 1.5).unwrap();
    let (m2, s2) = (0.4, 0.8);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=40 {
        for j in 1..=40 {
            let m1 = -1.6 + 0.1 * i as f64;
            let s1 = 0.05 * j as f64;
            let v = tcrps_divergence(m1, s1, m2, s2, &q);
            if v < best.0 {
                best = (v, m1, s1);
            }
        }
    }
    assert!((best.1 - m2).abs() < 1e-9 && (best.2 - s2).abs() < 1e-9, "{best:?}");
}

#[test]
fn fits_and_designs_are_deterministic() {
    let pts = spread_points(5, 10, 2, 0.05);
    let data = Dataset::new(pts.clone(), test_values(&pts, 5)).unwrap();
    let a = fit_mle(&data, &FitConfig::default()).unwrap();
    let b = fit_mle(&data, &FitConfig::default()).unwrap();
    assert_eq!(a.params(), b.params());
    let mut r1 = ChaCha8Rng::seed_from_u64(9);
    let mut r2 = ChaCha8Rng::seed_from_u64(9);
    let domain = regp::Domain::cube(3, -1.0, 2.0).unwrap();
    let d1: Vec<Vec<f64>> = regp::initial_design(&domain, 9, &mut r1).unwrap();
    let d2: Vec<Vec<f64>> = regp::initial_design(&domain, 9, &mut r2).unwrap();
    assert_eq!(d1, d2);
}
