use eos_core::EosError;
use serde::Serialize;

/// Failure of a run, printed as a JSON object on standard error.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(kind: &str, message: String) -> Self {
        Self {
            kind: kind.into(),
            message,
        }
    }

    pub fn config(message: String) -> Self {
        Self::new("config", message)
    }

    pub fn parse(message: String) -> Self {
        Self::new("parse", message)
    }

    pub fn io(message: String) -> Self {
        Self::new("io", message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<EosError> for CliError {
    fn from(e: EosError) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}
