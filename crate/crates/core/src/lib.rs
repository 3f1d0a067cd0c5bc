//! Entropic outlier sparsification.
//!
//! Learning with per-instance outlyingness weights `w` on the probability
//! simplex, found jointly with model parameters by minimizing the expected
//! error plus an entropy regularizer,
//!
//! ```text
//! L(w, theta, alpha) = sum_t w_t g(x_t, theta) + alpha * sum_t w_t ln w_t.
//! ```
//!
//! For fixed parameters the optimal weights are a softmax of `-g / alpha`
//! ([`weights::w_step`]), so each weight update costs O(T) whatever the
//! data dimension. [`fit::fit`] alternates that update with a weighted
//! parameter update supplied by an [`fit::ErrorModel`].
//!
//! On top of the core loop the crate provides
//! - [`models`]: Gaussian, squared-Euclidean and classifier-loss error models,
//! - [`anomaly`]: outlier flagging and ESS-based calibration of `alpha`,
//! - [`affinity`]: Gaussian and generalized pairwise affinity rows,
//! - [`supervised`]: weighted logistic regression, label-flip injection, AUC,
//! - [`harness`]: synthetic data, baselines, metrics and timing probes.
//!
//! ```
//! use eos_core::{fit, models::GaussianModel, Dataset, EosConfig};
//!
//! let mut rows: Vec<[f64; 2]> = (0..20).map(|i| [(i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1]).collect();
//! rows.push([25.0, -30.0]);
//! let data = Dataset::from_rows(&rows).unwrap();
//! let res = fit(&data, &GaussianModel, &EosConfig::with_alpha(1.0)).unwrap();
//! let w = res.weights.as_slice();
//! assert!(w[20] < 1e-6 * w[0]);
//! ```

pub mod affinity;
pub mod anomaly;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod harness;
pub mod models;
pub mod supervised;
pub mod weights;

pub use dataset::Dataset;
pub use error::{EosError, Result};
pub use fit::{fit, EosConfig, ErrorModel, FitResult, InitPolicy, Termination};
pub use weights::{
    effective_sample_fraction, objective, shannon_entropy, w_step, ErrorVector, WeightVector,
};
