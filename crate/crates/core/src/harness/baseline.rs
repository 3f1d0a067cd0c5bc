use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::models::{classical_mle, covariance_floor, floored_params, GaussianParams};

/// MAD to standard deviation under normality.
const MAD_SCALE: f64 = 1.482_602_218_505_602;

/// Flags `t` iff the squared Mahalanobis distance exceeds the chi-square
/// quantile with `D` degrees of freedom.
///
/// The location and scatter are the classical MLE, or with `robust` the
/// coordinatewise median and a diagonal of squared scaled MADs.
pub fn mahalanobis_chi2_baseline(data: &Dataset, quantile: f64, robust: bool) -> Result<Vec<bool>> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(EosError::InvalidConfig(format!(
            "quantile must lie in (0, 1), got {quantile}"
        )));
    }
    let d = data.dim();
    if data.len() < d + 2 {
        return Err(EosError::InvalidInput(format!(
            "baseline needs T >= D + 2 instances, got T={} with D={d}",
            data.len()
        )));
    }
    let params = if robust {
        median_mad(data)?
    } else {
        classical_mle(data)?
    };
    let threshold = ChiSquared::new(d as f64)
        .map_err(|e| EosError::InvalidInput(e.to_string()))?
        .inverse_cdf(quantile);
    Ok(data
        .rows()
        .map(|x| params.mahalanobis_sq(x) > threshold)
        .collect())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_mad(data: &Dataset) -> Result<GaussianParams> {
    let d = data.dim();
    let mut center = Vec::with_capacity(d);
    let mut scale = Vec::with_capacity(d);
    for j in 0..d {
        let mut column: Vec<f64> = data.rows().map(|r| r[j]).collect();
        let m = median(&mut column);
        let mut dev: Vec<f64> = column.iter().map(|v| (v - m).abs()).collect();
        center.push(m);
        scale.push(MAD_SCALE * median(&mut dev));
    }
    let sigma = DMatrix::from_fn(d, d, |i, j| if i == j { scale[i] * scale[i] } else { 0.0 });
    floored_params(center, sigma, covariance_floor(data))
}
