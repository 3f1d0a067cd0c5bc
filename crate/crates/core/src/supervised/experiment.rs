//! Repeated train/test splits with label flips injected into the training
//! part, comparing the plain classifier to its reweighted counterpart on
//! clean test labels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auc, inject_label_flips, robust_fit, scores, train_weighted_classifier, DEFAULT_L2};
use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::fit::EosConfig;
use crate::harness::metrics::MetricReport;
use crate::models::classifier_loss_error;
use crate::weights::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MislabelExperimentConfig {
    pub flip_proportion: f64,
    pub n_splits: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Candidate strengths as multiples of the plain classifier's mean
    /// training loss. A single entry is used as is; several are chosen
    /// among by inner cross-validation.
    pub alpha_grid: Vec<f64>,
    /// Folds of the noisy training split used to choose among `alpha_grid`.
    pub inner_folds: usize,
    pub l2_strength: f64,
    /// Z-score features with training-split statistics.
    pub standardize: bool,
    /// Convergence settings of the reweighted fit; `alpha` is ignored.
    pub eos: EosConfig,
}

impl Default for MislabelExperimentConfig {
    fn default() -> Self {
        Self {
            flip_proportion: 0.2,
            n_splits: 50,
            train_fraction: 0.75,
            seed: 0,
            alpha_grid: vec![0.1],
            inner_folds: 3,
            l2_strength: DEFAULT_L2,
            standardize: true,
            eos: EosConfig {
                tol: 1e-10,
                max_iters: 200,
                ..EosConfig::default()
            },
        }
    }
}

impl MislabelExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.flip_proportion) {
            return Err(EosError::InvalidConfig(format!(
                "flip proportion must lie in [0, 0.5), got {}",
                self.flip_proportion
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EosError::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.n_splits == 0 || self.inner_folds < 2 {
            return Err(EosError::InvalidConfig(
                "need at least one split and two inner folds".into(),
            ));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(EosError::InvalidConfig("alpha grid must hold positive values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub alpha: f64,
    pub plain_auc: f64,
    pub eos_auc: f64,
    pub n_flipped: usize,
    /// Mean converged weight of flipped training points (absent without flips).
    pub flipped_mean_weight: Option<f64>,
    pub clean_mean_weight: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MislabelReport {
    pub flip_proportion: f64,
    pub splits: Vec<SplitOutcome>,
    pub plain_auc: MetricReport,
    pub eos_auc: MetricReport,
    /// Paired `eos_auc - plain_auc`.
    pub improvement: MetricReport,
    /// Fraction of splits with `eos_auc >= plain_auc`.
    pub eos_not_worse: f64,
    /// Fraction of splits (with flips) where flipped points end with a
    /// lower mean weight than clean points.
    pub suppression: Option<f64>,
}

/// Stratified split: each class contributes `train_fraction` of its
/// members (rounded down, at least one) to training.
fn stratified_split(labels: &[u8], train_fraction: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&t| labels[t] == class).collect();
        if members.len() < 2 {
            return Err(EosError::InvalidInput(format!(
                "class {class} needs at least 2 instances to split"
            )));
        }
        members.shuffle(rng);
        let n_train = ((members.len() as f64 * train_fraction).floor() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn standardizer(train: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    let d = train.dim();
    let mut mean = vec![0.0; d];
    for x in train.rows() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; d];
    for x in train.rows() {
        for ((s, v), m) in sd.iter_mut().zip(x).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    let sd = sd.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, sd)
}

fn apply_standardizer(data: &Dataset, mean: &[f64], sd: &[f64]) -> Result<Dataset> {
    data.map_rows(|row| {
        for ((v, m), s) in row.iter_mut().zip(mean).zip(sd) {
            *v = (*v - m) / s;
        }
    })
}

/// Chooses the strength maximizing mean held-out AUC over stratified
/// folds of the (noisy) training data.
fn select_alpha(train: &Dataset, candidates: &[f64], config: &MislabelExperimentConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let labels = train.require_labels("alpha selection")?;
    let k = config.inner_folds;
    let mut fold_of = vec![0usize; train.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&t| labels[t] == class).collect();
        members.shuffle(rng);
        for (i, t) in members.into_iter().enumerate() {
            fold_of[t] = i % k;
        }
    }
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for &alpha in candidates {
        let eos = EosConfig {
            alpha,
            ..config.eos.clone()
        };
        let mut total = 0.0;
        for fold in 0..k {
            let fit_idx: Vec<usize> = (0..train.len()).filter(|&t| fold_of[t] != fold).collect();
            let held_idx: Vec<usize> = (0..train.len()).filter(|&t| fold_of[t] == fold).collect();
            let held = train.select(&held_idx)?;
            let res = robust_fit(&train.select(&fit_idx)?, &eos, config.l2_strength)?;
            total += auc(&scores(&res.params, &held), held.require_labels("alpha selection")?)?;
        }
        if total > best.0 {
            best = (total, alpha);
        }
    }
    Ok(best.1)
}

/// One split of the experiment.
pub fn run_mislabel_split(data: &Dataset, config: &MislabelExperimentConfig, split: usize) -> Result<SplitOutcome> {
    config.validate()?;
    let labels = data.require_labels("mislabel experiment")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(split as u64);

    let (train_idx, test_idx) = stratified_split(labels, config.train_fraction, &mut rng)?;
    let mut train = data.select(&train_idx)?;
    let mut test = data.select(&test_idx)?;
    if config.standardize {
        let (mean, sd) = standardizer(&train);
        train = apply_standardizer(&train, &mean, &sd)?;
        test = apply_standardizer(&test, &mean, &sd)?;
    }
    let (noisy, flipped) = inject_label_flips(&train, config.flip_proportion, rng.random())?;
    let test_labels = test.require_labels("mislabel experiment")?;

    let uniform = WeightVector::uniform(noisy.len())?;
    let plain = train_weighted_classifier(&noisy, &uniform, config.l2_strength)?;
    let plain_auc = auc(&scores(&plain, &test), test_labels)?;

    let mean_loss = classifier_loss_error(&noisy, &plain)?.expected(&uniform)?;
    let candidates: Vec<f64> = config.alpha_grid.iter().map(|m| m * mean_loss).collect();
    let alpha = select_alpha(&noisy, &candidates, config, &mut rng)?;
    let eos = EosConfig {
        alpha,
        ..config.eos.clone()
    };
    let res = robust_fit(&noisy, &eos, config.l2_strength)?;
    let eos_auc = auc(&scores(&res.params, &test), test_labels)?;

    let w = res.weights.as_slice();
    let mut is_flipped = vec![false; w.len()];
    for &t in &flipped {
        is_flipped[t] = true;
    }
    let mean_of = |want: bool| {
        let sel: Vec<f64> = w.iter().zip(&is_flipped).filter(|(_, f)| **f == want).map(|(v, _)| *v).collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
    };
    Ok(SplitOutcome {
        split,
        alpha,
        plain_auc,
        eos_auc,
        n_flipped: flipped.len(),
        flipped_mean_weight: mean_of(true),
        clean_mean_weight: mean_of(false).unwrap_or(0.0),
        iterations: res.iterations,
    })
}

/// Runs all splits (in parallel) at one flip proportion.
pub fn run_mislabel_experiment(data: &Dataset, config: &MislabelExperimentConfig) -> Result<MislabelReport> {
    config.validate()?;
    if config.n_splits < 2 {
        return Err(EosError::InvalidConfig("need at least 2 splits for intervals".into()));
    }
    let splits: Vec<SplitOutcome> = (0..config.n_splits)
        .into_par_iter()
        .map(|s| run_mislabel_split(data, config, s))
        .collect::<Result<_>>()?;
    let plain: Vec<f64> = splits.iter().map(|s| s.plain_auc).collect();
    let eos: Vec<f64> = splits.iter().map(|s| s.eos_auc).collect();
    let diff: Vec<f64> = splits.iter().map(|s| s.eos_auc - s.plain_auc).collect();
    let eos_not_worse = diff.iter().filter(|d| **d >= 0.0).count() as f64 / diff.len() as f64;
    let with_flips: Vec<bool> = splits
        .iter()
        .filter_map(|s| Some(s.flipped_mean_weight? < s.clean_mean_weight))
        .collect();
    let suppression = (!with_flips.is_empty())
        .then(|| with_flips.iter().filter(|b| **b).count() as f64 / with_flips.len() as f64);
    Ok(MislabelReport {
        flip_proportion: config.flip_proportion,
        splits,
        plain_auc: MetricReport::new("plain_auc", plain)?,
        eos_auc: MetricReport::new("eos_auc", eos)?,
        improvement: MetricReport::new("auc_improvement", diff)?,
        eos_not_worse,
        suppression,
    })
}
