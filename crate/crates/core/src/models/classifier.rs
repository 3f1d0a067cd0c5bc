use crate::dataset::Dataset;
use crate::error::Result;
use crate::fit::ErrorModel;
use crate::supervised::{predict_proba, train_weighted_classifier, ClassifierParams};
use crate::weights::{ErrorVector, WeightVector};

/// Predicted probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-12;

/// Per-sample negative log-likelihood of each label under the classifier.
pub fn classifier_loss_error(data: &Dataset, params: &ClassifierParams) -> Result<ErrorVector> {
    let labels = data.require_labels("classifier loss")?;
    params.check_dim(data.dim())?;
    ErrorVector::new(
        data.rows()
            .zip(labels)
            .map(|(x, &y)| {
                let p1 = predict_proba(params, x);
                let p = if y == 1 { p1 } else { 1.0 - p1 };
                -p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln()
            })
            .collect(),
    )
}

/// Weighted L2-regularized logistic regression as an error model.
///
/// `evaluate` adds the penalty `l2 * ||theta||^2` to every instance. The
/// shift is the same for all `t`, so the weight update is unchanged, while
/// the weighted error becomes exactly the objective the parameter update
/// minimizes.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierLossModel {
    pub l2_strength: f64,
}

impl ErrorModel for ClassifierLossModel {
    type Params = ClassifierParams;

    fn evaluate(&self, data: &Dataset, params: &ClassifierParams) -> Result<ErrorVector> {
        let penalty = self.l2_strength * params.squared_norm();
        let g = classifier_loss_error(data, params)?;
        if penalty == 0.0 {
            return Ok(g);
        }
        ErrorVector::new(g.into_inner().into_iter().map(|v| v + penalty).collect())
    }

    fn update_params(&self, data: &Dataset, weights: &WeightVector) -> Result<ClassifierParams> {
        train_weighted_classifier(data, weights, self.l2_strength)
    }
}
