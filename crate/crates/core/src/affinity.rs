//! Normalized affinities between an anchor point and every other point.
//!
//! With squared Euclidean distances as errors, the closed-form weight
//! update at strength `alpha` is exactly the spherically-symmetric
//! Gaussian kernel with per-dimension variance `sigma^2 = alpha / 2`.
//! Any other pairwise error can be plugged in the same way.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::models::squared_distance;
use crate::weights::{check_alpha, effective_sample_size, w_step, ErrorVector};

/// Accepted relative distance between attained and target perplexity.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-4;
const MAX_BISECTION_STEPS: usize = 200;

/// Affinities of one anchor to all other points; the self-pair is absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityRow {
    pub anchor_index: usize,
    /// Column index of every entry of `values`, skipping the anchor.
    pub neighbors: Vec<usize>,
    pub values: Vec<f64>,
    /// `alpha / 2`, present only for squared-Euclidean errors.
    pub sigma_sq: Option<f64>,
}

impl AffinityRow {
    /// `exp` of the row's Shannon entropy.
    pub fn perplexity(&self) -> f64 {
        let h: f64 = -self
            .values
            .iter()
            .filter(|v| **v > 0.0)
            .map(|v| v * v.ln())
            .sum::<f64>();
        h.exp()
    }
}

fn check_anchor(n_points: usize, anchor: usize) -> Result<()> {
    if n_points < 2 {
        return Err(EosError::InvalidInput(format!(
            "affinities need at least 2 points, got {n_points}"
        )));
    }
    if anchor >= n_points {
        return Err(EosError::InvalidInput(format!(
            "anchor {anchor} out of range for {n_points} points"
        )));
    }
    Ok(())
}

/// Squared distances from the anchor to every other point, in index order.
pub fn anchor_squared_distances(data: &Dataset, anchor: usize) -> Result<ErrorVector> {
    check_anchor(data.len(), anchor)?;
    let xi = data.row(anchor);
    ErrorVector::new(
        (0..data.len())
            .filter(|&j| j != anchor)
            .map(|j| squared_distance(xi, data.row(j)))
            .collect(),
    )
}

/// Gaussian affinities `exp(-||x_i - x_j||^2 / (2 sigma^2))`, normalized
/// over `j != i`.
pub fn gaussian_affinity_row(data: &Dataset, anchor: usize, sigma_sq: f64) -> Result<AffinityRow> {
    check_alpha(sigma_sq).map_err(|_| {
        EosError::InvalidConfig(format!("sigma_sq must be positive, got {sigma_sq}"))
    })?;
    let errors = anchor_squared_distances(data, anchor)?;
    generalized_affinity_row(anchor, &errors, 2.0 * sigma_sq, true)
}

/// Closed-form weight update over arbitrary pairwise errors of `anchor`
/// (one entry per other point, in index order).
pub fn generalized_affinity_row(
    anchor: usize,
    errors_for_anchor: &ErrorVector,
    alpha: f64,
    squared_euclidean: bool,
) -> Result<AffinityRow> {
    let n_points = errors_for_anchor.len() + 1;
    check_anchor(n_points, anchor)?;
    let values = w_step(errors_for_anchor, alpha)?.into_inner();
    Ok(AffinityRow {
        anchor_index: anchor,
        neighbors: (0..n_points).filter(|&j| j != anchor).collect(),
        values,
        sigma_sq: squared_euclidean.then_some(0.5 * alpha),
    })
}

/// Every Gaussian affinity row at a shared bandwidth.
pub fn gaussian_affinity_matrix(data: &Dataset, sigma_sq: f64) -> Result<Vec<AffinityRow>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| gaussian_affinity_row(data, i, sigma_sq))
        .collect()
}

/// Every Gaussian affinity row, each with its bandwidth calibrated to
/// `target_perplexity`.
pub fn perplexity_affinity_matrix(data: &Dataset, target_perplexity: f64) -> Result<Vec<AffinityRow>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let errors = anchor_squared_distances(data, i)?;
            let alpha = calibrate_row_alpha(&errors, target_perplexity)?;
            generalized_affinity_row(i, &errors, alpha, true)
        })
        .collect()
}

fn row_perplexity(errors: &ErrorVector, alpha: f64) -> Result<f64> {
    Ok(effective_sample_size(&w_step(errors, alpha)?))
}

/// Strength `alpha` whose row has perplexity within
/// [`PERPLEXITY_TOLERANCE`] (relative) of the target, by bisection on
/// `ln alpha`.
pub fn calibrate_row_alpha(errors_for_anchor: &ErrorVector, target_perplexity: f64) -> Result<f64> {
    let g = errors_for_anchor.as_slice();
    let n = g.len() as f64;
    if !(target_perplexity >= 1.0 && target_perplexity <= n) {
        return Err(EosError::InvalidConfig(format!(
            "target perplexity must lie in [1, {n}], got {target_perplexity}"
        )));
    }
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let g_max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // ties at the minimum share the mass as alpha -> 0
    let floor = g.iter().filter(|&&v| v == g_min).count() as f64;
    let within = |p: f64| (p - target_perplexity).abs() <= PERPLEXITY_TOLERANCE * target_perplexity;
    if !within(floor) && target_perplexity < floor {
        return Err(EosError::Calibration {
            message: format!(
                "target perplexity {target_perplexity} is below the achievable range [{floor}, {n}]"
            ),
            achieved: floor,
        });
    }
    if g_max == g_min {
        if within(n) {
            return Ok(1.0);
        }
        return Err(EosError::Calibration {
            message: format!("all errors are equal, so the perplexity is always {n}"),
            achieved: n,
        });
    }

    let spread = g_max - g_min;
    let min_gap = g
        .iter()
        .filter(|&&v| v > g_min)
        .map(|v| v - g_min)
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = ((min_gap / 1e3).ln(), (spread * 1e4).ln());
    let p_lo = row_perplexity(errors_for_anchor, lo.exp())?;
    if within(p_lo) {
        return Ok(lo.exp());
    }
    let p_hi = row_perplexity(errors_for_anchor, hi.exp())?;
    if within(p_hi) {
        return Ok(hi.exp());
    }
    let mut achieved = p_lo;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        achieved = row_perplexity(errors_for_anchor, mid.exp())?;
        if within(achieved) {
            return Ok(mid.exp());
        }
        if achieved < target_perplexity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(EosError::Calibration {
        message: format!(
            "bisection did not reach perplexity {target_perplexity} in {MAX_BISECTION_STEPS} steps"
        ),
        achieved,
    })
}
