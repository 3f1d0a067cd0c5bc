use eos_core::{effective_sample_fraction, objective, shannon_entropy, w_step, ErrorVector, WeightVector};
use proptest::prelude::*;

fn errs(v: &[f64]) -> ErrorVector {
    ErrorVector::new(v.to_vec()).unwrap()
}

/// Minimum of the objective over the simplex grid with spacing `1/steps`.
fn grid_minimum(g: &[f64], alpha: f64, steps: usize) -> f64 {
    let e = errs(g);
    let h = 1.0 / steps as f64;
    let eval = |w: Vec<f64>| {
        let w = WeightVector::from_masses(w).unwrap();
        objective(&e, &w, alpha).unwrap()
    };
    let mut best = f64::INFINITY;
    match g.len() {
        2 => {
            for i in 0..=steps {
                let a = i as f64 * h;
                best = best.min(eval(vec![a, 1.0 - a]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    best = best.min(eval(vec![a, b, (1.0 - a - b).max(0.0)]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn closed_form_beats_grid_search() {
    let cases: [(&[f64], f64); 6] = [
        (&[0.0, 1.0], 1.0),
        (&[2.0, 2.0], 0.5),
        (&[0.3, 4.0], 0.1),
        (&[1.0, 2.0, 3.0], 1.0),
        (&[0.0, 0.0, 5.0], 2.0),
        (&[4.0, 0.5, 1.5], 0.25),
    ];
    for (g, alpha) in cases {
        let w = w_step(&errs(g), alpha).unwrap();
        let l = objective(&errs(g), &w, alpha).unwrap();
        let grid = grid_minimum(g, alpha, 1000);
        assert!(l <= grid + 1e-12, "g={g:?} alpha={alpha}: {l} vs grid {grid}");
        assert!(grid - l < 1e-4, "grid far from optimum: {l} vs {grid}");
    }
}

#[test]
fn manhattan_errors_follow_the_same_update() {
    // anchor 0 on the line {0, 1, 3}; L1 distances 1 and 3
    let w = w_step(&errs(&[1.0, 3.0]), 2.0).unwrap();
    let expected = 1.0 / (1.0 + (-1.0f64).exp());
    assert!((w.as_slice()[0] - expected).abs() < 1e-15);
    let grid = grid_minimum(&[1.0, 3.0], 2.0, 1000);
    assert!(objective(&errs(&[1.0, 3.0]), &w, 2.0).unwrap() <= grid + 1e-12);
}

#[test]
fn entropy_increases_along_an_alpha_grid() {
    let g = errs(&[0.1, 0.4, 2.0, 3.5, 7.0, 7.5]);
    let entropies: Vec<f64> = (0..10)
        .map(|i| 10f64.powf(-2.0 + 0.5 * i as f64))
        .map(|a| shannon_entropy(&w_step(&g, a).unwrap()))
        .collect();
    for pair in entropies.windows(2) {
        assert!(pair[1] >= pair[0] - 1e-12, "{entropies:?}");
    }
}

fn error_vectors() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 2..40)
}

fn alphas() -> impl Strategy<Value = f64> {
    (-3.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_invariance(g in error_vectors(), alpha in alphas(), c in -1e3..1e3f64) {
        let a = w_step(&errs(&g), alpha).unwrap();
        let shifted: Vec<f64> = g.iter().map(|v| v + c).collect();
        let b = w_step(&errs(&shifted), alpha).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn temperature_scaling(g in error_vectors(), alpha in alphas(), s in 0.01..100.0f64) {
        let a = w_step(&errs(&g), alpha).unwrap();
        let scaled: Vec<f64> = g.iter().map(|v| v * s).collect();
        let b = w_step(&errs(&scaled), alpha * s).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_is_monotone_in_alpha(g in error_vectors(), a1 in alphas(), a2 in alphas()) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let h_lo = shannon_entropy(&w_step(&errs(&g), lo).unwrap());
        let h_hi = shannon_entropy(&w_step(&errs(&g), hi).unwrap());
        prop_assert!(h_hi >= h_lo - 1e-10);
    }

    #[test]
    fn simplex_closure_under_extreme_magnitudes(
        g in prop::collection::vec(prop_oneof![-1e300..1e300f64, -1e-300..1e-300f64, Just(0.0)], 1..30),
        e in -300.0..300.0f64,
    ) {
        let alpha = 10f64.powf(e);
        let w = w_step(&errs(&g), alpha).unwrap();
        let sum: f64 = w.as_slice().iter().sum();
        prop_assert!(w.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lower_error_never_gets_less_weight(g in error_vectors(), alpha in alphas()) {
        let w = w_step(&errs(&g), alpha).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                if g[i] < g[j] {
                    prop_assert!(w.as_slice()[i] >= w.as_slice()[j]);
                }
            }
        }
    }

    #[test]
    fn ess_fraction_is_monotone_in_alpha(g in error_vectors(), a in alphas()) {
        let f1 = effective_sample_fraction(&w_step(&errs(&g), a).unwrap());
        let f2 = effective_sample_fraction(&w_step(&errs(&g), 2.0 * a).unwrap());
        prop_assert!(f2 >= f1 - 1e-10);
        prop_assert!(f1 > 0.0 && f1 <= 1.0 + 1e-12);
    }

    #[test]
    fn closed_form_beats_random_simplex_points(
        g in prop::collection::vec(0.0..5.0f64, 2..6),
        alpha in alphas(),
        masses in prop::collection::vec(0.0..1.0f64, 6),
    ) {
        let e = errs(&g);
        let best = objective(&e, &w_step(&e, alpha).unwrap(), alpha).unwrap();
        let m: Vec<f64> = masses[..g.len()].to_vec();
        prop_assume!(m.iter().sum::<f64>() > 1e-6);
        let other = WeightVector::from_masses(m).unwrap();
        prop_assert!(best <= objective(&e, &other, alpha).unwrap() + 1e-12 * best.abs().max(1.0));
    }
}
