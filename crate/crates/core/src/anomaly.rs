//! Unsupervised anomaly detection with the Gaussian error model.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::fit::{fit, EosConfig, FitResult, Termination};
use crate::models::{GaussianModel, GaussianParams};
use crate::weights::{effective_sample_fraction, ErrorVector, WeightVector};

pub const DEFAULT_KAPPA: f64 = 0.1;

/// Bracket for the regularization strength searched by [`calibrate_alpha`].
pub const ALPHA_BRACKET: (f64, f64) = (1e-6, 1e6);
/// Accepted distance between attained and target ESS fraction.
pub const ESS_TOLERANCE: f64 = 0.01;
const MAX_BISECTION_STEPS: usize = 100;

/// How converged weights become binary outlier flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlagRule {
    /// Flag `t` iff `w_t < kappa / T`, with `0 < kappa <= 1`.
    RelativeThreshold { kappa: f64 },
    /// Flag the `k` smallest weights (at most `T - 1`).
    TopK { k: usize },
}

impl Default for FlagRule {
    fn default() -> Self {
        FlagRule::RelativeThreshold {
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl FlagRule {
    fn validate(&self) -> Result<()> {
        match *self {
            FlagRule::RelativeThreshold { kappa } if !(kappa > 0.0 && kappa <= 1.0) => Err(
                EosError::InvalidConfig(format!("kappa must lie in (0, 1], got {kappa}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub weights: WeightVector,
    pub errors: ErrorVector,
    /// `true` marks an outlier.
    pub flags: Vec<bool>,
    pub rule: FlagRule,
    pub alpha_used: f64,
    pub gaussian: GaussianParams,
    pub objective_trajectory: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl OutlierReport {
    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(t, f)| f.then_some(t))
            .collect()
    }
}

/// Applies `rule` to converged weights. TopK ties are broken by larger
/// error, then by smaller index.
pub fn flag_outliers(weights: &WeightVector, errors: &ErrorVector, rule: FlagRule) -> Result<Vec<bool>> {
    rule.validate()?;
    if weights.len() != errors.len() {
        return Err(EosError::InvalidInput(format!(
            "{} weights but {} errors",
            weights.len(),
            errors.len()
        )));
    }
    let w = weights.as_slice();
    let g = errors.as_slice();
    let n = w.len();
    let mut flags = vec![false; n];
    match rule {
        FlagRule::RelativeThreshold { kappa } => {
            let threshold = kappa / n as f64;
            for (f, wt) in flags.iter_mut().zip(w) {
                *f = *wt < threshold;
            }
        }
        FlagRule::TopK { k } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                w[a].total_cmp(&w[b])
                    .then(g[b].total_cmp(&g[a]))
                    .then(a.cmp(&b))
            });
            for &t in order.iter().take(k.min(n - 1)) {
                flags[t] = true;
            }
        }
    }
    Ok(flags)
}

/// Fits the Gaussian model and flags outliers by `rule`.
pub fn detect(data: &Dataset, config: &EosConfig, rule: FlagRule) -> Result<OutlierReport> {
    rule.validate()?;
    if data.len() < data.dim() + 2 {
        return Err(EosError::InvalidInput(format!(
            "detection needs T >= D + 2 instances, got T={} with D={}",
            data.len(),
            data.dim()
        )));
    }
    let FitResult {
        weights,
        params,
        errors,
        objective_trajectory,
        iterations,
        termination,
    } = fit(data, &GaussianModel, config)?;
    let flags = flag_outliers(&weights, &errors, rule)?;
    Ok(OutlierReport {
        weights,
        errors,
        flags,
        rule,
        alpha_used: config.alpha,
        gaussian: params,
        objective_trajectory,
        iterations,
        termination,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCalibration {
    pub alpha: f64,
    /// ESS fraction of the fit at `alpha`.
    pub achieved_fraction: f64,
    /// Set when the target lies outside what the bracket can reach and
    /// `alpha` is the nearer bracket endpoint.
    pub at_bracket_edge: bool,
    pub fits: usize,
}

fn ess_fraction_at(data: &Dataset, config: &EosConfig, alpha: f64) -> Result<f64> {
    let cfg = EosConfig {
        alpha,
        ..config.clone()
    };
    Ok(effective_sample_fraction(&fit(data, &GaussianModel, &cfg)?.weights))
}

/// Chooses `alpha` so that the fitted weights have an effective sample
/// fraction `exp(H(w)) / T` within [`ESS_TOLERANCE`] of the target, by
/// bisection on `ln alpha` over [`ALPHA_BRACKET`]. `config.alpha` is ignored.
pub fn calibrate_alpha(data: &Dataset, target: f64, config: &EosConfig) -> Result<AlphaCalibration> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(EosError::InvalidConfig(format!(
            "target ESS fraction must lie in (0, 1], got {target}"
        )));
    }
    let (lo_alpha, hi_alpha) = ALPHA_BRACKET;
    let mut fits = 0;
    let mut eval = |alpha: f64| {
        fits += 1;
        ess_fraction_at(data, config, alpha)
    };

    let f_lo = eval(lo_alpha)?;
    if (f_lo - target).abs() <= ESS_TOLERANCE || target <= f_lo {
        return Ok(AlphaCalibration {
            alpha: lo_alpha,
            achieved_fraction: f_lo,
            at_bracket_edge: (f_lo - target).abs() > ESS_TOLERANCE,
            fits,
        });
    }
    let f_hi = eval(hi_alpha)?;
    if (f_hi - target).abs() <= ESS_TOLERANCE || target >= f_hi {
        return Ok(AlphaCalibration {
            alpha: hi_alpha,
            achieved_fraction: f_hi,
            at_bracket_edge: (f_hi - target).abs() > ESS_TOLERANCE,
            fits,
        });
    }

    let (mut lo, mut hi) = (lo_alpha.ln(), hi_alpha.ln());
    let mut achieved = f_lo;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let alpha = mid.exp();
        achieved = eval(alpha)?;
        if (achieved - target).abs() <= ESS_TOLERANCE {
            return Ok(AlphaCalibration {
                alpha,
                achieved_fraction: achieved,
                at_bracket_edge: false,
                fits,
            });
        }
        if achieved < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(EosError::Calibration {
        message: format!("no alpha reached ESS fraction {target} in {MAX_BISECTION_STEPS} steps"),
        achieved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identical(t: usize) -> Dataset {
        Dataset::from_row_major(t, 2, [1.0, -2.0].repeat(t)).unwrap()
    }

    #[test]
    fn identical_points_are_never_flagged() {
        let report = detect(&identical(12), &EosConfig::default(), FlagRule::default()).unwrap();
        assert!(report.flags.iter().all(|f| !f));
        assert_eq!(report.gaussian.mu(), &[1.0, -2.0]);
    }

    #[test]
    fn too_few_points() {
        let data = Dataset::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            detect(&data, &EosConfig::default(), FlagRule::default()),
            Err(EosError::InvalidInput(_))
        ));
    }

    #[test]
    fn topk_breaks_ties_by_error_then_index() {
        let w = WeightVector::new(vec![0.1, 0.1, 0.1, 0.7]).unwrap();
        let g = ErrorVector::new(vec![1.0, 2.0, 1.0, 0.0]).unwrap();
        let flags = flag_outliers(&w, &g, FlagRule::TopK { k: 2 }).unwrap();
        assert_eq!(flags, vec![true, true, false, false]);
        let flags = flag_outliers(&w, &g, FlagRule::TopK { k: 10 }).unwrap();
        assert_eq!(flags.iter().filter(|f| **f).count(), 3);
    }

    #[test]
    fn relative_threshold_bounds() {
        let w = WeightVector::uniform(4).unwrap();
        let g = ErrorVector::new(vec![0.0; 4]).unwrap();
        assert!(flag_outliers(&w, &g, FlagRule::RelativeThreshold { kappa: 1.5 }).is_err());
        assert!(flag_outliers(&w, &g, FlagRule::RelativeThreshold { kappa: 0.0 }).is_err());
        let flags = flag_outliers(&w, &g, FlagRule::RelativeThreshold { kappa: 1.0 }).unwrap();
        assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn calibration_on_identical_points_returns_lower_edge() {
        let cal = calibrate_alpha(&identical(10), 0.5, &EosConfig::default()).unwrap();
        assert_eq!(cal.alpha, ALPHA_BRACKET.0);
        assert!((cal.achieved_fraction - 1.0).abs() < 1e-12);
        assert!(cal.at_bracket_edge);
        assert!(calibrate_alpha(&identical(10), 0.0, &EosConfig::default()).is_err());
        assert!(calibrate_alpha(&identical(10), 1.2, &EosConfig::default()).is_err());
    }
}
