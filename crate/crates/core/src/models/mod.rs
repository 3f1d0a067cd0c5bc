//! Concrete error models.

mod classifier;
mod euclidean;
mod gaussian;

pub use classifier::{classifier_loss_error, ClassifierLossModel, PROB_CLAMP};
pub use euclidean::{squared_euclidean_error, SquaredEuclideanModel};
pub(crate) use euclidean::squared_distance;
pub use gaussian::{
    classical_mle, covariance_floor, gaussian_error, weighted_gaussian_mle, GaussianModel, GaussianParams,
    RIDGE_FLOOR, RIDGE_SCALE,
};
pub(crate) use gaussian::floored_params;
