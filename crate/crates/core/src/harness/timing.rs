use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EosError, Result};
use crate::weights::{w_step, ErrorVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Error-vector lengths for the instance-count probe.
    pub t_grid: Vec<usize>,
    /// Data dimensions for the dimension probe.
    pub d_grid: Vec<usize>,
    /// Instance count used by every dimension-probe cell.
    pub d_probe_instances: usize,
    pub repeats: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            t_grid: vec![100_000, 200_000, 400_000],
            d_grid: vec![2, 20, 200],
            d_probe_instances: 100_000,
            repeats: 21,
            alpha: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingAxis {
    Instances,
    Dimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub axis: TimingAxis,
    pub n_instances: usize,
    /// Dimension of the data the errors came from; `None` for synthetic errors.
    pub dim: Option<usize>,
    pub median_secs: f64,
    /// Interquartile range of the timings.
    pub iqr_secs: f64,
    pub min_secs: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn axis(&self, axis: TimingAxis) -> impl Iterator<Item = &TimingRow> {
        self.rows.iter().filter(move |r| r.axis == axis)
    }

    /// Median-time ratios between consecutive cells of the instance probe.
    pub fn instance_ratios(&self) -> Vec<f64> {
        let medians: Vec<f64> = self.axis(TimingAxis::Instances).map(|r| r.median_secs).collect();
        medians.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Largest over smallest median across the dimension probe.
    pub fn dimension_spread(&self) -> Option<f64> {
        let medians: Vec<f64> = self.axis(TimingAxis::Dimension).map(|r| r.median_secs).collect();
        let max = medians.iter().copied().fold(f64::NAN, f64::max);
        let min = medians.iter().copied().fold(f64::NAN, f64::min);
        (!medians.is_empty()).then_some(max / min)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Errors computed from `n` standard-normal points in `dim` dimensions:
/// squared distance to the sample mean over `dim`.
fn errors_from_data(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Result<ErrorVector> {
    let mut values = vec![0.0; n * dim];
    for v in values.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mut mean = vec![0.0; dim];
    for row in values.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    ErrorVector::new(
        values
            .chunks_exact(dim)
            .map(|row| row.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>() / dim as f64)
            .collect(),
    )
}

/// Times the closed-form weight update alone on precomputed errors.
///
/// Cells are measured round-robin, one call per cell per repeat, after a
/// discarded warm-up call, so slow drift of the machine affects all cells
/// alike. Runs on the calling thread.
pub fn timing_probe_wstep(config: &TimingConfig) -> Result<TimingTable> {
    if config.t_grid.is_empty() && config.d_grid.is_empty() {
        return Err(EosError::InvalidConfig("timing grids are empty".into()));
    }
    if config.repeats < 5 {
        return Err(EosError::InvalidConfig(format!(
            "timing needs at least 5 repeats, got {}",
            config.repeats
        )));
    }
    if config.t_grid.iter().chain(&config.d_grid).any(|&v| v == 0)
        || (!config.d_grid.is_empty() && config.d_probe_instances == 0)
    {
        return Err(EosError::InvalidConfig("grid values must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut cells: Vec<(TimingAxis, Option<usize>, ErrorVector)> = Vec::new();
    for &t in &config.t_grid {
        let g = (0..t).map(|_| rng.random_range(0.0..5.0)).collect();
        cells.push((TimingAxis::Instances, None, ErrorVector::new(g)?));
    }
    for &d in &config.d_grid {
        let g = errors_from_data(config.d_probe_instances, d, &mut rng)?;
        cells.push((TimingAxis::Dimension, Some(d), g));
    }

    for (_, _, g) in &cells {
        black_box(w_step(black_box(g), config.alpha)?);
    }
    let mut samples = vec![Vec::with_capacity(config.repeats); cells.len()];
    for _ in 0..config.repeats {
        for ((_, _, g), out) in cells.iter().zip(samples.iter_mut()) {
            let start = Instant::now();
            black_box(w_step(black_box(g), config.alpha)?);
            out.push(start.elapsed().as_secs_f64());
        }
    }

    let rows = cells
        .iter()
        .zip(samples)
        .map(|((axis, dim, g), mut s)| {
            s.sort_by(f64::total_cmp);
            TimingRow {
                axis: *axis,
                n_instances: g.len(),
                dim: *dim,
                median_secs: quantile(&s, 0.5),
                iqr_secs: quantile(&s, 0.75) - quantile(&s, 0.25),
                min_secs: s[0],
                repeats: s.len(),
            }
        })
        .collect();
    Ok(TimingTable { rows })
}
