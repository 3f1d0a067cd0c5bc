//! Label-noise-robust supervised training.
//!
//! The base learner is a per-sample-weighted, L2-regularized logistic
//! regression. Wrapping it with the alternating weight update gives
//! mislabeled training points large losses and hence small weights.

mod experiment;

pub use experiment::{
    run_mislabel_experiment, run_mislabel_split, MislabelExperimentConfig, MislabelReport,
    SplitOutcome,
};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::fit::{fit, EosConfig, FitResult};
use crate::models::ClassifierLossModel;
use crate::weights::WeightVector;

/// Default L2 strength of the built-in classifier.
pub const DEFAULT_L2: f64 = 1e-4;
/// Gradient-norm stopping threshold of the parameter update.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_NEWTON_STEPS: usize = 200;

/// Logistic-regression parameters. `l2_strength` penalizes both the
/// coefficients and the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub l2_strength: f64,
}

impl ClassifierParams {
    pub fn new(coefficients: Vec<f64>, intercept: f64, l2_strength: f64) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) || !intercept.is_finite() {
            return Err(EosError::InvalidInput("classifier parameters must be finite".into()));
        }
        check_l2(l2_strength)?;
        Ok(Self {
            coefficients,
            intercept,
            l2_strength,
        })
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.coefficients.len() != d {
            return Err(EosError::InvalidInput(format!(
                "classifier has {} coefficients for {d} features",
                self.coefficients.len()
            )));
        }
        Ok(())
    }

    /// `||coefficients||^2 + intercept^2`.
    pub fn squared_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>() + self.intercept * self.intercept
    }

    #[cfg(test)]
    fn as_vector(&self) -> Vec<f64> {
        let mut v = self.coefficients.clone();
        v.push(self.intercept);
        v
    }
}

fn check_l2(l2: f64) -> Result<()> {
    if l2.is_finite() && l2 >= 0.0 {
        Ok(())
    } else {
        Err(EosError::InvalidConfig(format!(
            "l2 strength must be non-negative, got {l2}"
        )))
    }
}

/// Log-odds `coefficients . x + intercept`.
pub fn decision_function(params: &ClassifierParams, x: &[f64]) -> f64 {
    params
        .coefficients
        .iter()
        .zip(x)
        .map(|(c, xi)| c * xi)
        .sum::<f64>()
        + params.intercept
}

/// Probability of label 1.
pub fn predict_proba(params: &ClassifierParams, x: &[f64]) -> f64 {
    sigmoid(decision_function(params, x))
}

/// Decision-function scores for every instance.
pub fn scores(params: &ClassifierParams, data: &Dataset) -> Vec<f64> {
    data.rows().map(|x| decision_function(params, x)).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn check_training_inputs<'a>(data: &'a Dataset, weights: &WeightVector) -> Result<&'a [u8]> {
    let labels = data.require_labels("classifier training")?;
    if weights.len() != data.len() {
        return Err(EosError::InvalidInput(format!(
            "{} weights for {} instances",
            weights.len(),
            data.len()
        )));
    }
    Ok(labels)
}

/// Weighted training objective
/// `sum_t w_t logloss(y_t, x_t) + l2 * (||coefficients||^2 + intercept^2)`
/// at the packed parameter vector `theta = [coefficients..., intercept]`.
pub fn weighted_logistic_objective(
    data: &Dataset,
    weights: &WeightVector,
    l2_strength: f64,
    theta: &[f64],
) -> Result<f64> {
    let labels = check_training_inputs(data, weights)?;
    Ok(objective_unchecked(data, labels, weights.as_slice(), l2_strength, theta))
}

/// Analytic gradient of [`weighted_logistic_objective`].
pub fn weighted_logistic_gradient(
    data: &Dataset,
    weights: &WeightVector,
    l2_strength: f64,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let labels = check_training_inputs(data, weights)?;
    let d = data.dim();
    let mut grad: Vec<f64> = theta.iter().map(|v| 2.0 * l2_strength * v).collect();
    for ((x, &y), &w) in data.rows().zip(labels).zip(weights.as_slice()) {
        let r = w * (sigmoid(linear(theta, x)) - f64::from(y));
        for (g, xi) in grad[..d].iter_mut().zip(x) {
            *g += r * xi;
        }
        grad[d] += r;
    }
    Ok(grad)
}

fn linear(theta: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    theta[..d].iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>() + theta[d]
}

fn objective_unchecked(data: &Dataset, labels: &[u8], w: &[f64], l2: f64, theta: &[f64]) -> f64 {
    let loss: f64 = data
        .rows()
        .zip(labels)
        .zip(w)
        .filter(|(_, &wt)| wt > 0.0)
        .map(|((x, &y), &wt)| {
            let z = linear(theta, x);
            wt * (softplus(z) - f64::from(y) * z)
        })
        .sum();
    loss + l2 * theta.iter().map(|v| v * v).sum::<f64>()
}

/// Newton's method with backtracking on the weighted, L2-regularized
/// logistic loss, until the gradient norm is at most [`GRADIENT_TOLERANCE`].
pub fn train_weighted_classifier(
    data: &Dataset,
    weights: &WeightVector,
    l2_strength: f64,
) -> Result<ClassifierParams> {
    check_l2(l2_strength)?;
    let labels = check_training_inputs(data, weights)?;
    let w = weights.as_slice();
    let d = data.dim();
    let p = d + 1;
    let mut theta = vec![0.0; p];
    let mut value = objective_unchecked(data, labels, w, l2_strength, &theta);

    let mut converged = false;
    for _ in 0..MAX_NEWTON_STEPS {
        let mut grad = DVector::from_iterator(p, theta.iter().map(|v| 2.0 * l2_strength * v));
        let mut hess = DMatrix::<f64>::identity(p, p) * (2.0 * l2_strength);
        for ((x, &y), &wt) in data.rows().zip(labels).zip(w) {
            if wt == 0.0 {
                continue;
            }
            let prob = sigmoid(linear(&theta, x));
            let r = wt * (prob - f64::from(y));
            let h = wt * prob * (1.0 - prob);
            for i in 0..p {
                let xi = if i < d { x[i] } else { 1.0 };
                grad[i] += r * xi;
                for j in 0..=i {
                    let xj = if j < d { x[j] } else { 1.0 };
                    hess[(i, j)] += h * xi * xj;
                }
            }
        }
        if grad.norm() <= GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        for i in 0..p {
            for j in 0..i {
                hess[(j, i)] = hess[(i, j)];
            }
        }
        let step = match hess.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => hess.clone().lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let slope = grad.dot(&step);
        // Once the predicted decrease is below what the objective can
        // resolve, a full step is taken if it does not visibly increase it.
        let resolution = 1e-13 * value.abs().max(f64::MIN_POSITIVE);
        let unresolvable = 0.5 * slope <= resolution;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let v = objective_unchecked(data, labels, w, l2_strength, &candidate);
            let sufficient = v <= value - 1e-4 * t * slope || (unresolvable && v <= value + resolution);
            if v.is_finite() && sufficient {
                theta = candidate;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let params = ClassifierParams::new(theta[..d].to_vec(), theta[d], l2_strength)?;
    if l2_strength == 0.0 && separates(&params, data, labels, w) {
        return Err(EosError::NonConvergence(format!(
            "weighted training data are perfectly separable, so the unregularized \
             solution diverges; use l2 > 0 (default {DEFAULT_L2})"
        )));
    }
    if !converged {
        return Err(EosError::NonConvergence(format!(
            "gradient norm still above {GRADIENT_TOLERANCE} when Newton's method stopped"
        )));
    }
    Ok(params)
}

fn separates(params: &ClassifierParams, data: &Dataset, labels: &[u8], w: &[f64]) -> bool {
    data.rows()
        .zip(labels)
        .zip(w)
        .filter(|(_, &wt)| wt > 0.0)
        .all(|((x, &y), _)| {
            let z = decision_function(params, x);
            if y == 1 {
                z > 0.0
            } else {
                z < 0.0
            }
        })
}

/// Alternating fit of the classifier and the outlyingness weights.
pub fn robust_fit(
    data: &Dataset,
    config: &EosConfig,
    l2_strength: f64,
) -> Result<FitResult<ClassifierParams>> {
    data.require_labels("robust training")?;
    check_l2(l2_strength)?;
    fit(data, &ClassifierLossModel { l2_strength }, config)
}

/// Flips `floor(p * T)` labels chosen uniformly without replacement.
/// Returns the corrupted copy and the sorted flipped indices.
pub fn inject_label_flips(data: &Dataset, p: f64, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    let labels = data.require_labels("label flipping")?;
    if !(0.0..0.5).contains(&p) {
        return Err(EosError::InvalidConfig(format!(
            "flip proportion must lie in [0, 0.5), got {p}"
        )));
    }
    let n_flips = (p * data.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flipped = sample(&mut rng, data.len(), n_flips).into_vec();
    flipped.sort_unstable();
    let mut corrupted = labels.to_vec();
    for &t in &flipped {
        corrupted[t] = 1 - corrupted[t];
    }
    Ok((data.relabeled(corrupted)?, flipped))
}

/// Area under the ROC curve as the Mann-Whitney statistic; ties count 1/2.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(EosError::InvalidInput(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|y| *y > 1) {
        return Err(EosError::InvalidInput("labels must be 0 or 1".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EosError::InvalidInput("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|y| **y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EosError::InvalidInput("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks over positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&t| labels[t] == 1).count() as f64 * midrank;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn labeled(rows: &[[f64; 1]], labels: &[u8]) -> Dataset {
        Dataset::from_rows(rows).unwrap().with_labels(labels.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_pair_has_zero_intercept() {
        let data = labeled(&[[-1.0], [1.0]], &[0, 1]);
        let p = train_weighted_classifier(&data, &WeightVector::uniform(2).unwrap(), 1e-4).unwrap();
        assert!(p.intercept.abs() < 1e-6, "{p:?}");
        assert!(p.coefficients[0] > 0.0);
    }

    #[test]
    fn one_hot_weight_learns_that_label() {
        let data = labeled(&[[-1.0], [1.0], [0.5]], &[0, 1, 0]);
        for (k, y) in [(0usize, 0u8), (1, 1), (2, 0)] {
            let mut w = vec![0.0; 3];
            w[k] = 1.0;
            let p = train_weighted_classifier(&data, &WeightVector::new(w).unwrap(), 1e-4).unwrap();
            let p1 = predict_proba(&p, data.row(k));
            let p_label = if y == 1 { p1 } else { 1.0 - p1 };
            assert!(p_label > 0.99, "k={k}: {p_label}");
        }
    }

    fn random_separable(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for t in 0..n {
            let y = (t % 2) as u8;
            let shift = if y == 1 { 2.0 } else { -2.0 };
            let x0: f64 = rng.sample::<f64, _>(StandardNormal) * 0.3 + shift;
            let x1: f64 = rng.sample(StandardNormal);
            rows.push(vec![x0, x1]);
            labels.push(y);
        }
        Dataset::from_rows(&rows).unwrap().with_labels(labels).unwrap()
    }

    fn finite_difference(data: &Dataset, w: &WeightVector, l2: f64, theta: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..theta.len())
            .map(|i| {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (weighted_logistic_objective(data, w, l2, &plus).unwrap()
                    - weighted_logistic_objective(data, w, l2, &minus).unwrap())
                    / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_vanishes_at_returned_params() {
        let data = random_separable(100, 3);
        let w = WeightVector::uniform(100).unwrap();
        let p = train_weighted_classifier(&data, &w, 1e-4).unwrap();
        let theta = p.as_vector();
        let g = weighted_logistic_gradient(&data, &w, 1e-4, &theta).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= GRADIENT_TOLERANCE, "{norm}");
        let fd = finite_difference(&data, &w, 1e-4, &theta);
        for (a, b) in fd.iter().zip(&g) {
            // both are at noise level at the optimum
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let data = random_separable(60, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = WeightVector::from_masses((0..60).map(|_| rng.random_range(0.1..1.0)).collect())
            .unwrap();
        for _ in 0..10 {
            let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = weighted_logistic_gradient(&data, &w, 1e-3, &theta).unwrap();
            let fd = finite_difference(&data, &w, 1e-3, &theta);
            for (a, b) in fd.iter().zip(&g) {
                assert!((a - b).abs() <= 1e-4 * b.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn separable_without_l2_is_an_error() {
        let data = random_separable(40, 1);
        let err = train_weighted_classifier(&data, &WeightVector::uniform(40).unwrap(), 0.0)
            .unwrap_err();
        assert!(matches!(err, EosError::NonConvergence(ref m) if m.contains("l2 > 0")), "{err}");
    }

    #[test]
    fn overlapping_classes_train_without_l2() {
        let data = labeled(&[[-1.0], [0.0], [1.0], [0.5], [-0.5]], &[0, 1, 1, 0, 0]);
        let w = WeightVector::uniform(5).unwrap();
        assert!(train_weighted_classifier(&data, &w, 0.0).is_ok());
    }

    #[test]
    fn flips_examples() {
        let data = Dataset::from_row_major(100, 1, (0..100).map(f64::from).collect())
            .unwrap()
            .with_labels((0..100).map(|t| (t % 2) as u8).collect())
            .unwrap();
        let (same, none) = inject_label_flips(&data, 0.0, 1).unwrap();
        assert!(none.is_empty());
        assert_eq!(same, data);

        let (noisy, flipped) = inject_label_flips(&data, 0.2, 42).unwrap();
        assert_eq!(flipped.len(), 20);
        assert!(flipped.windows(2).all(|w| w[0] < w[1]));
        assert!(flipped.iter().all(|&t| t < 100));
        let changed: Vec<usize> = (0..100)
            .filter(|&t| noisy.labels().unwrap()[t] != data.labels().unwrap()[t])
            .collect();
        assert_eq!(changed, flipped);
        assert_eq!(inject_label_flips(&data, 0.2, 42).unwrap().1, flipped);

        assert!(inject_label_flips(&data, 0.5, 1).is_err());
        assert!(inject_label_flips(&Dataset::from_rows(&[[0.0]]).unwrap(), 0.1, 1).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        // pairs (0.35,0.1) (0.35,0.4) (0.8,0.1) (0.8,0.4): 3 of 4 concordant
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(auc(&[0.1], &[1, 0]).is_err());
    }
}
