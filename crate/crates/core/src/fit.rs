//! The alternating weight/parameter scheme.
//!
//! Each iteration runs a parameter update for the current weights followed
//! by the closed-form weight update for the new parameters, and records the
//! objective at `(w_next, params)`. Both half-steps are partial
//! minimizations of the same objective, so the recorded trajectory never
//! increases for a model that honours the [`ErrorModel`] contract.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{EosError, Result};
use crate::weights::{check_alpha, objective, w_step, ErrorVector, WeightVector};

/// Relative slack allowed on a single objective increase before the run is
/// aborted as a contract violation.
pub const DESCENT_SLACK: f64 = 1e-10;

/// A per-instance error function paired with its weighted parameter update.
///
/// `update_params` must not increase the weighted error: for any previous
/// parameters `p`, `sum_t w_t g(x_t, update_params(w)) <= sum_t w_t g(x_t, p)`
/// up to a relative slack of [`DESCENT_SLACK`].
pub trait ErrorModel {
    type Params: Clone;

    /// Errors `g(x_t, params)` for every instance.
    fn evaluate(&self, data: &Dataset, params: &Self::Params) -> Result<ErrorVector>;

    /// Parameters minimizing the weighted error for fixed weights.
    fn update_params(&self, data: &Dataset, weights: &WeightVector) -> Result<Self::Params>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPolicy {
    /// `1/T` for every instance.
    #[default]
    Uniform,
    /// A Dirichlet(1, ..., 1) draw from the configured seed.
    SeededDirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    /// Entropy regularization strength, in the units of the error function.
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub init_policy: InitPolicy,
    pub seed: u64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            tol: 1e-12,
            max_iters: 500,
            init_policy: InitPolicy::Uniform,
            seed: 0,
        }
    }
}

impl EosConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(EosError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(EosError::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// Initial weights for `len` instances.
    pub fn initial_weights(&self, len: usize) -> Result<WeightVector> {
        match self.init_policy {
            InitPolicy::Uniform => WeightVector::uniform(len),
            InitPolicy::SeededDirichlet => {
                // normalized unit exponentials are Dirichlet(1, ..., 1)
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let masses = (0..len).map(|_| Exp1.sample(&mut rng)).collect();
                WeightVector::from_masses(masses)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxItersReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<P> {
    pub weights: WeightVector,
    pub params: P,
    /// Errors under `params`; `weights` is their closed-form weight update.
    pub errors: ErrorVector,
    /// Objective after every iteration.
    pub objective_trajectory: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl<P> FitResult<P> {
    pub fn final_objective(&self) -> f64 {
        *self
            .objective_trajectory
            .last()
            .expect("a fit runs at least one iteration")
    }
}

/// Runs the alternating scheme until the objective decrease drops to
/// `config.tol` or `config.max_iters` iterations have run.
pub fn fit<M: ErrorModel>(
    data: &Dataset,
    model: &M,
    config: &EosConfig,
) -> Result<FitResult<M::Params>> {
    config.validate()?;
    let mut weights = config.initial_weights(data.len())?;
    let mut trajectory = Vec::new();
    let mut previous = f64::INFINITY;
    let mut iteration = 0;

    loop {
        iteration += 1;
        let wrap = |e: EosError| EosError::Model {
            iteration,
            message: e.to_string(),
        };
        let params = model.update_params(data, &weights).map_err(wrap)?;
        let errors = model.evaluate(data, &params).map_err(wrap)?;
        if errors.len() != data.len() {
            return Err(wrap(EosError::InvalidInput(format!(
                "model returned {} errors for {} instances",
                errors.len(),
                data.len()
            ))));
        }
        weights = w_step(&errors, config.alpha)?;
        let current = objective(&errors, &weights, config.alpha)?;
        if !current.is_finite() {
            return Err(EosError::NumericalFailure(format!(
                "objective is {current} at iteration {iteration}"
            )));
        }
        trajectory.push(current);

        let decrease = previous - current;
        if decrease < -DESCENT_SLACK * current.abs().max(previous.abs()) {
            return Err(EosError::ContractViolation {
                iteration,
                previous,
                current,
            });
        }
        let termination = if decrease <= config.tol {
            Some(Termination::Converged)
        } else if iteration >= config.max_iters {
            Some(Termination::MaxItersReached)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(FitResult {
                weights,
                params,
                errors,
                objective_trajectory: trajectory,
                iterations: iteration,
                termination,
            });
        }
        previous = current;
    }
}
