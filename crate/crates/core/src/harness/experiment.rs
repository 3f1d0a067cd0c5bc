use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anomaly::{calibrate_alpha, detect, FlagRule};
use crate::error::{EosError, Result};
use crate::fit::EosConfig;
use crate::harness::baseline::mahalanobis_chi2_baseline;
use crate::harness::metrics::{precision, recall, MetricReport};
use crate::harness::synthetic::{generate, SyntheticSpec};
use crate::weights::effective_sample_fraction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticBenchConfig {
    /// Base spec; seed `i` of the run uses `spec.seed + i`.
    pub spec: SyntheticSpec,
    pub n_seeds: usize,
    /// Target ESS fraction for alpha calibration; `None` uses `eos.alpha`.
    pub ess_target: Option<f64>,
    /// Flag rule for the detector; `None` flags the true outlier count.
    pub rule: Option<FlagRule>,
    pub chi2_quantile: f64,
    pub eos: EosConfig,
}

impl Default for SyntheticBenchConfig {
    fn default() -> Self {
        Self {
            spec: SyntheticSpec::default(),
            n_seeds: 50,
            ess_target: Some(0.95),
            rule: None,
            chi2_quantile: 0.975,
            eos: EosConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub alpha: f64,
    pub ess_fraction: f64,
    pub iterations: usize,
    /// Precision is absent when a method flags nothing.
    pub eos_precision: Option<f64>,
    pub eos_recall: Option<f64>,
    pub chi2_precision: Option<f64>,
    pub chi2_recall: Option<f64>,
    pub robust_chi2_precision: Option<f64>,
    pub robust_chi2_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBenchReport {
    pub seeds: Vec<SeedOutcome>,
    /// One entry per method and metric with at least two defined values.
    pub metrics: Vec<MetricReport>,
    /// Fraction of seeds where the detector's precision is at least the
    /// classical chi-square baseline's (both defined).
    pub eos_not_worse_than_chi2: f64,
}

impl SyntheticBenchReport {
    pub fn metric(&self, name: &str) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.metric_name == name)
    }
}

pub fn run_seed(config: &SyntheticBenchConfig, index: usize) -> Result<SeedOutcome> {
    let spec = SyntheticSpec {
        seed: config.spec.seed.wrapping_add(index as u64),
        ..config.spec.clone()
    };
    let (data, truth) = generate(&spec)?;
    let alpha = match config.ess_target {
        Some(target) => calibrate_alpha(&data, target, &config.eos)?.alpha,
        None => config.eos.alpha,
    };
    let rule = config.rule.unwrap_or(FlagRule::TopK { k: truth.len() });
    let eos = EosConfig {
        alpha,
        ..config.eos.clone()
    };
    let report = detect(&data, &eos, rule)?;
    let chi2 = mahalanobis_chi2_baseline(&data, config.chi2_quantile, false)?;
    let robust = mahalanobis_chi2_baseline(&data, config.chi2_quantile, true)?;
    Ok(SeedOutcome {
        seed: spec.seed,
        alpha,
        ess_fraction: effective_sample_fraction(&report.weights),
        iterations: report.iterations,
        eos_precision: precision(&report.flags, &truth),
        eos_recall: recall(&report.flags, &truth),
        chi2_precision: precision(&chi2, &truth),
        chi2_recall: recall(&chi2, &truth),
        robust_chi2_precision: precision(&robust, &truth),
        robust_chi2_recall: recall(&robust, &truth),
    })
}

/// Runs every seed (in parallel) and summarizes precision and recall.
pub fn run_synthetic_benchmark(config: &SyntheticBenchConfig) -> Result<SyntheticBenchReport> {
    if config.n_seeds == 0 {
        return Err(EosError::InvalidConfig("n_seeds must be positive".into()));
    }
    config.spec.validate()?;
    let seeds: Vec<SeedOutcome> = (0..config.n_seeds)
        .into_par_iter()
        .map(|i| run_seed(config, i))
        .collect::<Result<_>>()?;

    type Getter = fn(&SeedOutcome) -> Option<f64>;
    let columns: [(&str, Getter); 6] = [
        ("eos_precision", |s| s.eos_precision),
        ("chi2_precision", |s| s.chi2_precision),
        ("robust_chi2_precision", |s| s.robust_chi2_precision),
        ("eos_recall", |s| s.eos_recall),
        ("chi2_recall", |s| s.chi2_recall),
        ("robust_chi2_recall", |s| s.robust_chi2_recall),
    ];
    let mut metrics = Vec::new();
    for (name, get) in columns {
        let values: Vec<f64> = seeds.iter().filter_map(get).collect();
        if values.len() >= 2 {
            metrics.push(MetricReport::new(name, values)?);
        }
    }
    let paired: Vec<bool> = seeds
        .iter()
        .filter_map(|s| Some(s.eos_precision? >= s.chi2_precision?))
        .collect();
    let eos_not_worse_than_chi2 = if paired.is_empty() {
        0.0
    } else {
        paired.iter().filter(|b| **b).count() as f64 / paired.len() as f64
    };
    Ok(SyntheticBenchReport {
        seeds,
        metrics,
        eos_not_worse_than_chi2,
    })
}
