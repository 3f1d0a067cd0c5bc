use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{EosError, Result};

/// Gaussian inliers contaminated by outliers drawn uniformly from a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_instances: usize,
    pub dim: usize,
    pub outlier_fraction: f64,
    pub inlier_mean: Vec<f64>,
    /// Rows of the inlier covariance.
    pub inlier_cov: Vec<Vec<f64>>,
    pub box_low: Vec<f64>,
    pub box_high: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self::planted(1000, 10, 0.05, 0)
    }
}

impl SyntheticSpec {
    /// Standard-normal inliers with outliers in the box `[5, 9]^D`.
    pub fn planted(n_instances: usize, dim: usize, outlier_fraction: f64, seed: u64) -> Self {
        Self {
            n_instances,
            dim,
            outlier_fraction,
            inlier_mean: vec![0.0; dim],
            inlier_cov: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            box_low: vec![5.0; dim],
            box_high: vec![9.0; dim],
            seed,
        }
    }

    /// Number of outliers `floor(outlier_fraction * T)`.
    pub fn n_outliers(&self) -> usize {
        (self.outlier_fraction * self.n_instances as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 || self.n_instances == 0 {
            return Err(EosError::InvalidConfig("T and D must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.outlier_fraction) {
            return Err(EosError::InvalidConfig(format!(
                "outlier fraction must lie in [0, 0.5), got {}",
                self.outlier_fraction
            )));
        }
        if self.n_outliers() + d + 2 > self.n_instances {
            return Err(EosError::InvalidConfig(format!(
                "{} outliers leave too few inliers for T={} and D={d}",
                self.n_outliers(),
                self.n_instances
            )));
        }
        let lengths = [
            self.inlier_mean.len(),
            self.inlier_cov.len(),
            self.box_low.len(),
            self.box_high.len(),
        ];
        if lengths.iter().any(|&l| l != d) || self.inlier_cov.iter().any(|r| r.len() != d) {
            return Err(EosError::InvalidConfig(format!(
                "mean, covariance and box must all have dimension {d}"
            )));
        }
        if self
            .box_low
            .iter()
            .zip(&self.box_high)
            .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo >= hi)
        {
            return Err(EosError::InvalidConfig(
                "outlier box needs finite low < high in every coordinate".into(),
            ));
        }
        Ok(())
    }

    fn cov_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.dim;
        let cov = DMatrix::from_fn(d, d, |i, j| self.inlier_cov[i][j]);
        if (0..d).any(|i| (0..i).any(|j| cov[(i, j)] != cov[(j, i)])) {
            return Err(EosError::InvalidInput("inlier covariance is not symmetric".into()));
        }
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| EosError::InvalidInput("inlier covariance is not positive definite".into()))
    }
}

/// Draws the dataset described by `spec`. Returns the rows (shuffled) and
/// the sorted indices of the outliers.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let factor = spec.cov_factor()?;
    let d = spec.dim;
    let k = spec.n_outliers();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut rows: Vec<(Vec<f64>, bool)> = Vec::with_capacity(spec.n_instances);
    let mut z = vec![0.0; d];
    for _ in 0..spec.n_instances - k {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = (0..d)
            .map(|i| spec.inlier_mean[i] + (0..=i).map(|j| factor[(i, j)] * z[j]).sum::<f64>())
            .collect();
        rows.push((x, false));
    }
    for _ in 0..k {
        let x = spec
            .box_low
            .iter()
            .zip(&spec.box_high)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect();
        rows.push((x, true));
    }
    rows.shuffle(&mut rng);

    let outliers = rows
        .iter()
        .enumerate()
        .filter_map(|(t, (_, o))| o.then_some(t))
        .collect();
    let values = rows.into_iter().flat_map(|(x, _)| x).collect();
    Ok((Dataset::from_row_major(spec.n_instances, d, values)?, outliers))
}

/// Two balanced classes with identity covariance and means
/// `+-(mean_norm / sqrt(D)) * 1`; label 1 for the positive mean.
pub fn generate_two_class(n_instances: usize, dim: usize, mean_norm: f64, seed: u64) -> Result<Dataset> {
    if n_instances < 4 || dim == 0 {
        return Err(EosError::InvalidConfig(format!(
            "two-class data needs T >= 4 and D >= 1, got T={n_instances}, D={dim}"
        )));
    }
    let offset = mean_norm / (dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_instances * dim);
    let mut labels = Vec::with_capacity(n_instances);
    for t in 0..n_instances {
        let y = (t % 2) as u8;
        let shift = if y == 1 { offset } else { -offset };
        for _ in 0..dim {
            values.push(shift + rng.sample::<f64, _>(StandardNormal));
        }
        labels.push(y);
    }
    Dataset::from_row_major(n_instances, dim, values)?.with_labels(labels)
}
