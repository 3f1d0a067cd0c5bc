use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::fit::ErrorModel;
use crate::weights::{ErrorVector, WeightVector};

/// `g_t = ||x_t - center||^2`.
pub fn squared_euclidean_error(data: &Dataset, center: &[f64]) -> Result<ErrorVector> {
    if center.len() != data.dim() {
        return Err(EosError::InvalidInput(format!(
            "center has length {} but dataset has dimension {}",
            center.len(),
            data.dim()
        )));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(EosError::InvalidInput("center must be finite".into()));
    }
    ErrorVector::new(data.rows().map(|x| squared_distance(x, center)).collect())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance to a single center; the parameter update is the
/// weighted mean, which minimizes the weighted squared error exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredEuclideanModel;

impl ErrorModel for SquaredEuclideanModel {
    type Params = Vec<f64>;

    fn evaluate(&self, data: &Dataset, center: &Vec<f64>) -> Result<ErrorVector> {
        squared_euclidean_error(data, center)
    }

    fn update_params(&self, data: &Dataset, weights: &WeightVector) -> Result<Vec<f64>> {
        if weights.len() != data.len() {
            return Err(EosError::InvalidInput(format!(
                "{} weights for {} instances",
                weights.len(),
                data.len()
            )));
        }
        let mut center = vec![0.0; data.dim()];
        for (x, w) in data.rows().zip(weights.as_slice()) {
            for (c, xi) in center.iter_mut().zip(x) {
                *c += w * xi;
            }
        }
        Ok(center)
    }
}
