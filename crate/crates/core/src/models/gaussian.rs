//! Multivariate Gaussian error model.
//!
//! The per-instance error is the dimension-normalized negative
//! log-likelihood without its constant term,
//!
//! ```text
//! g(x, mu, Sigma) = (1/D) * (0.5 ln det Sigma + 0.5 (x - mu)^T Sigma^{-1} (x - mu)),
//! ```
//!
//! and the parameter update is the weighted maximum-likelihood estimate.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::fit::ErrorModel;
use crate::weights::{ErrorVector, WeightVector};

/// Eigenvalue floor of the weighted covariance, as a fraction of the mean
/// eigenvalue `trace / D` of the unweighted data covariance.
pub const RIDGE_SCALE: f64 = 1e-8;
/// Floor used when the data covariance is exactly zero.
pub const RIDGE_FLOOR: f64 = 1e-12;

const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Mean and covariance of a multivariate Gaussian, with the lower Cholesky
/// factor of the covariance cached.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mu: Vec<f64>,
    sigma: DMatrix<f64>,
    ridge: f64,
    // row-major lower factor, sigma = L L^T
    lower: Vec<f64>,
    log_det: f64,
}

impl GaussianParams {
    /// Validates symmetry and positive definiteness of `sigma`, which is
    /// expected to already include `ridge` on its diagonal.
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let d = mu.len();
        if d == 0 || sigma.nrows() != d || sigma.ncols() != d {
            return Err(EosError::InvalidInput(format!(
                "mean has length {d} but covariance is {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) || ridge.is_nan() || ridge < 0.0 {
            return Err(EosError::InvalidInput(
                "gaussian parameters must be finite with a non-negative ridge".into(),
            ));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()).max(1.0) {
                    return Err(EosError::InvalidInput(format!(
                        "covariance is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        let Some(chol) = sigma.clone().cholesky() else {
            return Err(EosError::DegenerateCovariance {
                smallest_eigenvalue: smallest_eigenvalue(&sigma),
            });
        };
        let l = chol.l();
        Ok(Self::from_factor(mu, sigma, ridge, &l))
    }

    /// `l` is lower triangular with a positive diagonal and `l l^T = sigma`.
    fn from_factor(mu: Vec<f64>, sigma: DMatrix<f64>, ridge: f64, l: &DMatrix<f64>) -> Self {
        let d = mu.len();
        let mut lower = vec![0.0; d * d];
        let mut log_det = 0.0;
        for i in 0..d {
            for j in 0..=i {
                lower[i * d + j] = l[(i, j)];
            }
            log_det += 2.0 * l[(i, i)].ln();
        }
        Self {
            mu,
            sigma,
            ridge,
            lower,
            log_det,
        }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Eigenvalue floor that `sigma` was raised to (zero if none was needed).
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Squared Mahalanobis distance `(x - mu)^T Sigma^{-1} (x - mu)`,
    /// by forward substitution against the cached factor.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        self.mahalanobis_into(x, &mut vec![0.0; self.mu.len()])
    }

    fn mahalanobis_into(&self, x: &[f64], y: &mut [f64]) -> f64 {
        let d = self.mu.len();
        let mut total = 0.0;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let partial: f64 = row.iter().zip(&y[..i]).map(|(l, yj)| l * yj).sum();
            y[i] = (x[i] - self.mu[i] - partial) / self.lower[i * d + i];
            total += y[i] * y[i];
        }
        total
    }

    /// Covariance as nested rows, for reporting.
    pub fn sigma_rows(&self) -> Vec<Vec<f64>> {
        self.sigma
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

pub(crate) fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_dim(data: &Dataset, d: usize) -> Result<()> {
    if data.dim() != d {
        return Err(EosError::InvalidInput(format!(
            "dataset has dimension {} but parameters have dimension {d}",
            data.dim()
        )));
    }
    Ok(())
}

/// Gaussian error `g_t` for every instance.
pub fn gaussian_error(data: &Dataset, params: &GaussianParams) -> Result<ErrorVector> {
    let d = params.dim();
    check_dim(data, d)?;
    let scale = 1.0 / d as f64;
    let half_log_det = 0.5 * params.log_det;
    let mut buf = vec![0.0; d];
    ErrorVector::new(
        data.rows()
            .map(|x| scale * (half_log_det + 0.5 * params.mahalanobis_into(x, &mut buf)))
            .collect(),
    )
}

/// Weighted mean and covariance. Eigenvalues of the covariance below
/// [`covariance_floor`] of the data are raised to it, which keeps the
/// result the exact minimizer of the weighted error over covariances with
/// that floor. The floor depends on the data only, so it is the same at
/// every iteration of a fit.
pub fn weighted_gaussian_mle(data: &Dataset, weights: &WeightVector) -> Result<GaussianParams> {
    if weights.len() != data.len() {
        return Err(EosError::InvalidInput(format!(
            "{} weights for {} instances",
            weights.len(),
            data.len()
        )));
    }
    let (mu, sigma) = weighted_moments(data, weights.as_slice());
    floored_params(mu, sigma, covariance_floor(data))
}

fn weighted_moments(data: &Dataset, weights: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = data.dim();
    let mut mu = vec![0.0; d];
    for (x, &w) in data.rows().zip(weights) {
        for (m, xi) in mu.iter_mut().zip(x) {
            *m += w * xi;
        }
    }

    let mut cov = vec![0.0; d * d];
    let mut diff = vec![0.0; d];
    for (x, &w) in data.rows().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for ((di, xi), mi) in diff.iter_mut().zip(x).zip(&mu) {
            *di = xi - mi;
        }
        for i in 0..d {
            let wi = w * diff[i];
            let row = &mut cov[i * d..i * d + i + 1];
            for (c, dj) in row.iter_mut().zip(&diff[..=i]) {
                *c += wi * dj;
            }
        }
    }
    let sigma = DMatrix::from_fn(d, d, |i, j| {
        if j <= i {
            cov[i * d + j]
        } else {
            cov[j * d + i]
        }
    });
    (mu, sigma)
}

/// `RIDGE_SCALE * trace / D` of the unweighted data covariance, at least
/// `RIDGE_FLOOR`.
pub fn covariance_floor(data: &Dataset) -> f64 {
    let t = data.len() as f64;
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for x in data.rows() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / t;
        }
    }
    let trace: f64 = data
        .rows()
        .map(|x| x.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>() / t)
        .sum();
    (RIDGE_SCALE * trace / d as f64).max(RIDGE_FLOOR)
}

/// Parameters with every eigenvalue of `sigma` below `floor` raised to
/// `floor`; `ridge` records `floor` when anything was raised.
pub(crate) fn floored_params(mu: Vec<f64>, sigma: DMatrix<f64>, floor: f64) -> Result<GaussianParams> {
    let d = sigma.nrows();
    let eig = ((&sigma + sigma.transpose()) * 0.5).symmetric_eigen();
    if eig.eigenvalues.min() >= floor {
        return GaussianParams::new(mu, sigma, 0.0);
    }
    let lambda = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&lambda) * v.transpose();
    let sigma = DMatrix::from_fn(d, d, |i, j| 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]));
    // The floor binds, so the error is first-order sensitive to the floored
    // eigenvalues. A Cholesky of the rebuilt matrix would perturb them by
    // about eps * cond; the QR of diag(sqrt(lambda)) V^T keeps them to
    // about eps * sqrt(cond).
    let r = (DMatrix::from_diagonal(&lambda.map(f64::sqrt)) * v.transpose()).qr().r();
    let mut l = r.transpose();
    for j in 0..d {
        if l[(j, j)] < 0.0 {
            l.column_mut(j).neg_mut();
        }
    }
    Ok(GaussianParams::from_factor(mu, sigma, floor, &l))
}

/// Unweighted maximum-likelihood estimate (1/T-normalized covariance).
pub fn classical_mle(data: &Dataset) -> Result<GaussianParams> {
    weighted_gaussian_mle(data, &WeightVector::uniform(data.len())?)
}

/// Gaussian negative log-likelihood with the weighted MLE as parameter update.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianModel;

impl ErrorModel for GaussianModel {
    type Params = GaussianParams;

    fn evaluate(&self, data: &Dataset, params: &GaussianParams) -> Result<ErrorVector> {
        gaussian_error(data, params)
    }

    fn update_params(&self, data: &Dataset, weights: &WeightVector) -> Result<GaussianParams> {
        weighted_gaussian_mle(data, weights)
    }
}

/// Dense-inverse evaluation, kept as an independent reference for tests.
#[cfg(test)]
pub(crate) fn dense_reference_error(x: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> f64 {
    let d = mu.len();
    let inv = sigma.clone().try_inverse().unwrap();
    let diff = nalgebra::DVector::from_iterator(d, x.iter().zip(mu).map(|(a, b)| a - b));
    let maha = (diff.transpose() * inv * &diff)[(0, 0)];
    (0.5 * sigma.determinant().ln() + 0.5 * maha) / d as f64
}
