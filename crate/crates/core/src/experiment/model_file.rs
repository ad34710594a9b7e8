use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DataTable, Dataset};
use crate::evaluation::{evaluate_orders, Metric};
use crate::error::{Error, Result};
use crate::learner::{Model, TrainSummary};
use crate::preprocess::FittedPlan;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub learner: String,
    /// Feature names the model consumes, after preprocessing.
    pub features: Vec<String>,
    #[serde(default)]
    pub config_hash: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// RFC 3339 creation time.
    pub created: String,
    pub tool_version: String,
    #[serde(default)]
    pub training: Option<TrainSummary>,
}

/// A trained model with the preprocessing it expects, scorable without the
/// training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u64,
    /// Fitted on the training objects; replayed on anything scored.
    pub preprocessing: FittedPlan,
    #[serde(flatten)]
    pub model: Model,
    pub metadata: ModelMetadata,
}

impl ModelFile {
    pub fn new(preprocessing: FittedPlan, model: Model, metadata: ModelMetadata) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            preprocessing,
            model,
            metadata,
        }
    }

    /// Raw objects (in the training input schema) to utilities.
    pub fn score_table(&self, table: &DataTable) -> Result<Vec<f64>> {
        let x = self.preprocessing.replay(table)?.numeric_matrix()?;
        x.iter().map(|row| self.model.score(row)).collect()
    }

    /// `metric` of the model on a labelled dataset in the training input schema.
    pub fn evaluate(&self, dataset: &Dataset, metric: Metric) -> Result<f64> {
        let x = self.preprocessing.replay(&dataset.table)?.numeric_matrix()?;
        if let Some(row) = x.iter().find(|r| r.len() != self.model.input_dim()) {
            return Err(Error::Dimension {
                expected: self.model.input_dim(),
                found: row.len(),
            });
        }
        evaluate_orders(&self.model, &x, &dataset.table, &dataset.orders, metric)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let value = crate::json::parse_value(bytes)?;
        let version = value.get("format_version").ok_or_else(|| Error::Field {
            path: "format_version".into(),
            message: "missing field".into(),
        })?;
        let found = version.as_u64().ok_or_else(|| Error::Field {
            path: "format_version".into(),
            message: format!("expected a non-negative integer, found {version}"),
        })?;
        if found != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found,
                supported: FORMAT_VERSION,
            });
        }
        let file: ModelFile = crate::json::from_value(value)?;
        if file.model.input_dim() != file.metadata.features.len() {
            return Err(Error::Field {
                path: "metadata.features".into(),
                message: format!(
                    "{} features listed but the model takes {} inputs",
                    file.metadata.features.len(),
                    file.model.input_dim()
                ),
            });
        }
        Ok(file)
    }
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json()).map_err(Error::file(path))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&std::fs::read(path).map_err(Error::file(path))?)
}
