use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use preflearn::dataset::{FeatureSchema, ParserOptions};
use preflearn::experiment::DataSource;
use preflearn::preprocess::{compute_stats, FeatureStats};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::ApiError;

/// What an upload contained.
pub enum Upload {
    Single(Vec<u8>),
    Dual { objects: Vec<u8>, orders: Vec<u8> },
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub schema: FeatureSchema,
    pub stats: FeatureStats,
    pub objects: usize,
    pub orders: usize,
    pub pairs: usize,
    pub options: ParserOptions,
}

#[derive(Clone)]
pub struct StoredDataset {
    pub summary: DatasetSummary,
    pub source: DataSource,
}

/// Uploaded datasets, stored on disk under their content hash.
pub struct DatasetStore {
    dir: PathBuf,
    entries: Mutex<HashMap<String, StoredDataset>>,
}

fn content_id(upload: &Upload, options: &ParserOptions) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(options).expect("options serialize"));
    match upload {
        Upload::Single(b) => {
            h.update(b"single\0");
            h.update(b);
        }
        Upload::Dual { objects, orders } => {
            h.update(b"dual\0");
            h.update((objects.len() as u64).to_le_bytes());
            h.update(objects);
            h.update(orders);
        }
    }
    h.finalize()[..12].iter().map(|b| format!("{b:02x}")).collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
    std::fs::write(path, bytes).map_err(|e| ApiError::Internal(format!("{}: {e}", path.display())))
}

impl DatasetStore {
    pub fn new(dir: PathBuf) -> Self {
        DatasetStore {
            dir,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, id: &str) -> Option<StoredDataset> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    /// Parse and store an upload; uploading the same content again returns
    /// the existing entry.
    pub fn insert(&self, upload: Upload, options: ParserOptions) -> Result<DatasetSummary, ApiError> {
        options.validate()?;
        let id = content_id(&upload, &options);
        if let Some(existing) = self.get(&id) {
            return Ok(existing.summary);
        }
        let dir = self.dir.join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| ApiError::Internal(format!("{}: {e}", dir.display())))?;
        let source = match &upload {
            Upload::Single(bytes) => {
                let path = dir.join("data.csv");
                write(&path, bytes)?;
                DataSource::SingleFile {
                    path,
                    options: options.clone(),
                }
            }
            Upload::Dual { objects, orders } => {
                let (o, r) = (dir.join("objects.csv"), dir.join("orders.csv"));
                write(&o, objects)?;
                write(&r, orders)?;
                DataSource::DualFile {
                    objects: o,
                    orders: r,
                    options: options.clone(),
                }
            }
        };
        let dataset = match source.load() {
            Ok(d) => d,
            Err(e) => {
                let _ = std::fs::remove_dir_all(&dir);
                return Err(e.into());
            }
        };
        let summary = DatasetSummary {
            dataset_id: id.clone(),
            schema: dataset.table.schema().clone(),
            stats: compute_stats(&dataset.table)?,
            objects: dataset.table.len(),
            orders: dataset.orders.orders.len(),
            pairs: dataset.preferences().len(),
            options,
        };
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).insert(
            id,
            StoredDataset {
                summary: summary.clone(),
                source,
            },
        );
        Ok(summary)
    }
}
