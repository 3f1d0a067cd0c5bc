use eos_core::anomaly::{calibrate_alpha, detect, FlagRule};
use eos_core::models::{gaussian_error, weighted_gaussian_mle, GaussianModel, GaussianParams};
use eos_core::{fit, Dataset, EosConfig, InitPolicy, Termination, WeightVector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_data(t: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..t * d).map(|_| rng.sample(StandardNormal)).collect();
    Dataset::from_row_major(t, d, values).unwrap()
}

/// 190 standard-normal points plus 10 planted at radius 7; returns the
/// data and the planted indices.
fn planted_2d(seed: u64) -> (Dataset, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for _ in 0..190 {
        rows.push(vec![rng.sample::<f64, _>(StandardNormal), rng.sample(StandardNormal)]);
    }
    let planted: Vec<usize> = (0..10).map(|i| 19 * i + 5).collect();
    for &t in &planted {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        rows.insert(t, vec![7.0 * angle.cos(), 7.0 * angle.sin()]);
    }
    (Dataset::from_rows(&rows).unwrap(), planted)
}

fn descends(trajectory: &[f64]) -> bool {
    trajectory
        .windows(2)
        .all(|p| p[1] <= p[0] + 1e-10 * p[0].abs().max(p[1].abs()))
}

#[test]
fn planted_points_get_the_smallest_weights() {
    let (data, planted) = planted_2d(11);
    let report = detect(&data, &EosConfig::with_alpha(1.0), FlagRule::TopK { k: 10 }).unwrap();
    assert_eq!(report.flagged_indices(), planted);
    let w = report.weights.as_slice();
    let max_planted = planted.iter().map(|&t| w[t]).fold(0.0, f64::max);
    let min_inlier = (0..200)
        .filter(|t| !planted.contains(t))
        .map(|t| w[t])
        .fold(f64::INFINITY, f64::min);
    assert!(max_planted < min_inlier);
}

#[test]
fn relative_threshold_separates_planted_points() {
    let (data, planted) = planted_2d(11);
    let t = data.len() as f64;
    let report = detect(&data, &EosConfig::with_alpha(1.0), FlagRule::default()).unwrap();
    let w = report.weights.as_slice();
    // kappa values that isolate the planted set exactly
    let lo = planted.iter().map(|&i| w[i] * t).fold(0.0, f64::max);
    let hi = (0..200)
        .filter(|i| !planted.contains(i))
        .map(|i| w[i] * t)
        .fold(f64::INFINITY, f64::min);
    assert!(lo < 1e-3 && hi > lo, "planted up to {lo}, inliers from {hi}");
    let kappa = (lo * hi).sqrt();
    let exact = detect(&data, &EosConfig::with_alpha(1.0), FlagRule::RelativeThreshold { kappa }).unwrap();
    assert_eq!(exact.flagged_indices(), planted);
    // the default kappa catches every planted point
    let flagged = report.flagged_indices();
    assert!(planted.iter().all(|p| flagged.contains(p)));
}

#[test]
fn relative_threshold_is_monotone_in_kappa() {
    let (data, _) = planted_2d(3);
    let mut previous = usize::MAX;
    for kappa in [1.0, 0.5, 0.1, 0.01, 1e-4, 1e-8] {
        let n = detect(&data, &EosConfig::with_alpha(1.0), FlagRule::RelativeThreshold { kappa })
            .unwrap()
            .flags
            .iter()
            .filter(|f| **f)
            .count();
        assert!(n <= previous);
        previous = n;
    }
}

#[test]
fn topk_flag_sets_are_nested() {
    let (data, _) = planted_2d(5);
    let fitted = detect(&data, &EosConfig::with_alpha(1.0), FlagRule::TopK { k: 1 }).unwrap();
    let mut previous: Vec<usize> = Vec::new();
    for k in 1..30 {
        let flags = eos_core::anomaly::flag_outliers(&fitted.weights, &fitted.errors, FlagRule::TopK { k }).unwrap();
        let set: Vec<usize> = (0..flags.len()).filter(|&t| flags[t]).collect();
        assert_eq!(set.len(), k);
        assert!(previous.iter().all(|p| set.contains(p)));
        previous = set;
    }
}

#[test]
fn calibration_hits_the_target_fraction() {
    let (data, _) = planted_2d(11);
    let cal = calibrate_alpha(&data, 0.95, &EosConfig::default()).unwrap();
    assert!(!cal.at_bracket_edge);
    let refit = fit(&data, &GaussianModel, &EosConfig::with_alpha(cal.alpha)).unwrap();
    let ess = eos_core::effective_sample_fraction(&refit.weights);
    assert!((0.94..=0.96).contains(&ess), "{ess}");

    let full = calibrate_alpha(&data, 1.0, &EosConfig::default()).unwrap();
    assert!(full.achieved_fraction >= 0.99);
}

#[test]
fn identical_seeds_give_identical_fits() {
    let data = gaussian_data(300, 4, 8);
    let cfg = EosConfig {
        init_policy: InitPolicy::SeededDirichlet,
        seed: 42,
        ..EosConfig::with_alpha(0.8)
    };
    let a = fit(&data, &GaussianModel, &cfg).unwrap();
    let b = fit(&data, &GaussianModel, &cfg).unwrap();
    assert_eq!(a.weights, b.weights);
    assert_eq!(a.objective_trajectory, b.objective_trajectory);
    let c = fit(&data, &GaussianModel, &EosConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.objective_trajectory[0], c.objective_trajectory[0]);
}

#[test]
fn random_fits_descend() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let d = rng.random_range(1..=8);
        let t = rng.random_range(d + 2..=400);
        let alpha = 10f64.powf(rng.random_range(-2.5..1.0));
        let data = gaussian_data(t, d, case);
        let res = fit(&data, &GaussianModel, &EosConfig::with_alpha(alpha)).unwrap();
        assert!(descends(&res.objective_trajectory), "case {case}");
        assert!(matches!(res.termination, Termination::Converged | Termination::MaxItersReached));
    }
}

/// Weighted mean error of the data under `params`.
fn weighted_loss(data: &Dataset, w: &WeightVector, params: &GaussianParams) -> f64 {
    gaussian_error(data, params).unwrap().expected(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn weighted_mle_beats_perturbations(
        seed in 0u64..1000,
        masses in prop::collection::vec(0.05..1.0f64, 30),
        dmu in prop::collection::vec(-0.3..0.3f64, 3),
        dsig in prop::collection::vec(-0.2..0.2f64, 6),
    ) {
        let data = gaussian_data(30, 3, seed);
        let w = WeightVector::from_masses(masses).unwrap();
        let mle = weighted_gaussian_mle(&data, &w).unwrap();
        let base = weighted_loss(&data, &w, &mle);

        let mu: Vec<f64> = mle.mu().iter().zip(&dmu).map(|(m, d)| m + d).collect();
        let shifted = GaussianParams::new(mu, mle.sigma().clone(), 0.0).unwrap();
        prop_assert!(base <= weighted_loss(&data, &w, &shifted) + 1e-12);

        let mut delta = DMatrix::zeros(3, 3);
        let mut k = 0;
        for i in 0..3 {
            for j in 0..=i {
                delta[(i, j)] = dsig[k];
                delta[(j, i)] = dsig[k];
                k += 1;
            }
        }
        let sigma = mle.sigma() + delta;
        if let Ok(perturbed) = GaussianParams::new(mle.mu().to_vec(), sigma, 0.0) {
            prop_assert!(base <= weighted_loss(&data, &w, &perturbed) + 1e-12);
        }
    }

    #[test]
    fn fits_descend_from_random_starts(seed in 0u64..10_000, alpha in 0.2..5.0f64) {
        let data = gaussian_data(60, 2, seed);
        let cfg = EosConfig {
            init_policy: InitPolicy::SeededDirichlet,
            seed,
            ..EosConfig::with_alpha(alpha)
        };
        let res = fit(&data, &GaussianModel, &cfg).unwrap();
        prop_assert!(descends(&res.objective_trajectory));
        let sum: f64 = res.weights.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }
}
