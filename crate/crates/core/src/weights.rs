//! Outlyingness weights on the probability simplex and the closed-form
//! entropy-regularized weight update.
//!
//! For a fixed vector of per-instance errors `g` and a regularization
//! strength `alpha > 0`, the functional
//!
//! ```text
//! L(w) = sum_t w_t g_t + alpha * sum_t w_t ln w_t,   w on the simplex
//! ```
//!
//! is strictly convex and has the unique minimizer
//! `w_t = exp(-g_t / alpha) / sum_s exp(-g_s / alpha)`, which [`w_step`]
//! evaluates in O(T) time regardless of the dimension of the data that
//! produced `g`.

use serde::{Deserialize, Serialize};

use crate::error::{EosError, Result};

/// Absolute tolerance on the unit sum of a [`WeightVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A probability distribution over the `T` instances of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates that `weights` is non-empty, non-negative and sums to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(EosError::InvalidInput("weight vector is empty".into()));
        }
        if let Some((t, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(EosError::InvalidInput(format!(
                "weight {t} is {w}, expected a finite non-negative value"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(EosError::InvalidInput(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Uniform weights `1/len`.
    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(EosError::InvalidInput("weight vector is empty".into()));
        }
        Ok(Self(vec![1.0 / len as f64; len]))
    }

    /// Normalizes arbitrary non-negative masses onto the simplex.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if masses.is_empty() || !total.is_finite() || total <= 0.0 || masses.iter().any(|m| *m < 0.0)
        {
            return Err(EosError::InvalidInput(
                "masses must be non-negative with a positive finite total".into(),
            ));
        }
        Ok(Self(masses.into_iter().map(|m| m / total).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-instance values of an error function. Every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErrorVector(Vec<f64>);

impl ErrorVector {
    pub fn new(errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(EosError::InvalidInput("error vector is empty".into()));
        }
        if let Some((t, g)) = errors.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(EosError::InvalidInput(format!("error {t} is not finite ({g})")));
        }
        Ok(Self(errors))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Weighted mean error `sum_t w_t g_t`.
    pub fn expected(&self, weights: &WeightVector) -> Result<f64> {
        check_lengths(self, weights)?;
        Ok(self.0.iter().zip(weights.as_slice()).map(|(g, w)| g * w).sum())
    }
}

impl AsRef<[f64]> for ErrorVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(EosError::InvalidConfig(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

fn check_lengths(errors: &ErrorVector, weights: &WeightVector) -> Result<()> {
    if errors.len() != weights.len() {
        return Err(EosError::InvalidInput(format!(
            "{} errors but {} weights",
            errors.len(),
            weights.len()
        )));
    }
    Ok(())
}

/// Closed-form minimizer of the entropy-regularized expected error.
///
/// Exponentiates `-(g_t - min g) / alpha`, so the largest term is exactly
/// one and nothing overflows; entries far above the minimum underflow to
/// zero.
pub fn w_step(errors: &ErrorVector, alpha: f64) -> Result<WeightVector> {
    check_alpha(alpha)?;
    let g = errors.as_slice();
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = g.iter().map(|&gt| (-(gt - g_min) / alpha).exp()).collect();
    // the minimizing entry contributes exp(0) = 1, so the sum is in [1, T]
    let total: f64 = w.iter().sum();
    for wt in &mut w {
        *wt /= total;
    }
    Ok(WeightVector(w))
}

/// `sum_t w_t g_t + alpha * sum_t w_t ln w_t`, with `0 ln 0 = 0`.
pub fn objective(errors: &ErrorVector, weights: &WeightVector, alpha: f64) -> Result<f64> {
    check_lengths(errors, weights)?;
    let expected = errors.expected(weights)?;
    Ok(expected - alpha * shannon_entropy(weights))
}

/// Shannon entropy `-sum_t w_t ln w_t` in nats.
pub fn shannon_entropy(weights: &WeightVector) -> f64 {
    -weights
        .as_slice()
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w * w.ln())
        .sum::<f64>()
}

/// Effective sample size `exp(H(w))`.
pub fn effective_sample_size(weights: &WeightVector) -> f64 {
    shannon_entropy(weights).exp()
}

/// Effective sample size divided by `T`, in `(0, 1]`.
pub fn effective_sample_fraction(weights: &WeightVector) -> f64 {
    effective_sample_size(weights) / weights.len() as f64
}
