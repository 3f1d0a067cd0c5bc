use serde::{Deserialize, Serialize};

use crate::error::{EosError, Result};

/// A fixed dataset of `T` instances in `D` dimensions, stored row-major,
/// optionally with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n_instances: usize,
    n_features: usize,
    values: Vec<f64>,
    labels: Option<Vec<u8>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn from_row_major(n_instances: usize, n_features: usize, values: Vec<f64>) -> Result<Self> {
        if n_instances == 0 || n_features == 0 {
            return Err(EosError::InvalidInput(format!(
                "dataset must have T >= 1 and D >= 1, got T={n_instances}, D={n_features}"
            )));
        }
        if values.len() != n_instances * n_features {
            return Err(EosError::InvalidInput(format!(
                "expected {} values for a {n_instances}x{n_features} dataset, got {}",
                n_instances * n_features,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EosError::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                i / n_features,
                i % n_features
            )));
        }
        Ok(Self {
            n_instances,
            n_features,
            values,
            labels: None,
            feature_names: None,
        })
    }

    /// Builds a dataset from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if let Some(t) = rows.iter().position(|r| r.as_ref().len() != d) {
            return Err(EosError::InvalidInput(format!(
                "row {t} has {} columns, expected {d}",
                rows[t].as_ref().len()
            )));
        }
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(rows.len(), d, values)
    }

    /// Attaches binary labels.
    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.n_instances {
            return Err(EosError::InvalidInput(format!(
                "{} labels for {} instances",
                labels.len(),
                self.n_instances
            )));
        }
        if let Some(t) = labels.iter().position(|y| *y > 1) {
            return Err(EosError::InvalidInput(format!(
                "label {t} is {}, expected 0 or 1",
                labels[t]
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(EosError::InvalidInput(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Number of instances `T`.
    pub fn len(&self) -> usize {
        self.n_instances
    }

    /// Always false; a dataset holds at least one instance.
    pub fn is_empty(&self) -> bool {
        self.n_instances == 0
    }

    /// Dimension `D`.
    pub fn dim(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_features..(t + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_features)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Labels, or an invalid-input error naming `context` when absent.
    pub fn require_labels(&self, context: &str) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| EosError::InvalidInput(format!("{context} requires labels")))
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// A new dataset holding the given rows (and their labels), in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(EosError::InvalidInput("cannot select zero rows".into()));
        }
        if let Some(&t) = indices.iter().find(|&&t| t >= self.n_instances) {
            return Err(EosError::InvalidInput(format!(
                "row index {t} out of range for {} instances",
                self.n_instances
            )));
        }
        let values = indices.iter().flat_map(|&t| self.row(t).iter().copied()).collect();
        Ok(Self {
            n_instances: indices.len(),
            n_features: self.n_features,
            values,
            labels: self
                .labels
                .as_ref()
                .map(|y| indices.iter().map(|&t| y[t]).collect()),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Replaces the labels without re-validating the features.
    pub(crate) fn relabeled(&self, labels: Vec<u8>) -> Result<Self> {
        self.clone().with_labels(labels)
    }

    /// Applies `f` to every row in place, e.g. for standardization.
    pub fn map_rows(&self, mut f: impl FnMut(&mut [f64])) -> Result<Self> {
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.n_features) {
            f(row);
        }
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(EosError::InvalidInput("row map produced non-finite values".into()));
        }
        Ok(out)
    }
}
