use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EosError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A θ-step or error evaluation failed inside the alternating loop.
    #[error("error model failed at iteration {iteration}: {message}")]
    Model { iteration: usize, message: String },

    /// The covariance could not be factorized, even after the ridge floor was added.
    #[error("degenerate covariance (smallest eigenvalue {smallest_eigenvalue:e})")]
    DegenerateCovariance { smallest_eigenvalue: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The objective rose between iterations by more than the allowed slack.
    #[error(
        "objective increased from {previous} to {current} at iteration {iteration}; \
         the error model's theta update violates the descent contract"
    )]
    ContractViolation {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("calibration failed: {message} (achieved {achieved})")]
    Calibration { message: String, achieved: f64 },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl EosError {
    /// Short machine-readable tag for serialized error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            EosError::InvalidInput(_) => "invalid_input",
            EosError::InvalidConfig(_) => "invalid_config",
            EosError::Model { .. } => "model",
            EosError::DegenerateCovariance { .. } => "degenerate_covariance",
            EosError::NumericalFailure(_) => "numerical_failure",
            EosError::ContractViolation { .. } => "contract_violation",
            EosError::Calibration { .. } => "calibration",
            EosError::NonConvergence(_) => "non_convergence",
        }
    }
}

pub type Result<T, E = EosError> = std::result::Result<T, E>;
