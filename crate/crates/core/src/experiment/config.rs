use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{parse_dual_file, parse_single_file, Dataset, ParserOptions};
use crate::error::{Error, Result};
use crate::evaluation::{ValidationMode, ValidationSpec};
use crate::featsel::SelectionConfig;
use crate::learner::LearnerSpec;
use crate::preprocess::PreprocessPlan;
use crate::rng;
use crate::sushi;
use crate::synthetic::{gen_dataset, SynthFunction, SynthSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthSpec),
    SingleFile {
        path: PathBuf,
        #[serde(default)]
        options: ParserOptions,
    },
    DualFile {
        objects: PathBuf,
        orders: PathBuf,
        #[serde(default)]
        options: ParserOptions,
    },
    Sushi {
        items: PathBuf,
        orders: PathBuf,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(Error::file(path))
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Synthetic(spec) => Ok(gen_dataset(spec)?.dataset()),
            DataSource::SingleFile { path, options } => {
                let (table, orders) = parse_single_file(&read(path)?, options)?;
                Dataset::new(table, orders)
            }
            DataSource::DualFile {
                objects,
                orders,
                options,
            } => {
                let (table, orders) = parse_dual_file(&read(objects)?, &read(orders)?, options)?;
                Dataset::new(table, orders)
            }
            DataSource::Sushi { items, orders } => sushi::load(&read(items)?, &read(orders)?),
        }
    }

    /// Paths this source reads, for existence checks.
    pub fn paths(&self) -> Vec<&Path> {
        match self {
            DataSource::Synthetic(_) => Vec::new(),
            DataSource::SingleFile { path, .. } => vec![path],
            DataSource::DualFile { objects, orders, .. } => vec![objects, orders],
            DataSource::Sushi { items, orders } => vec![items, orders],
        }
    }

    fn paths_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            DataSource::Synthetic(_) => Vec::new(),
            DataSource::SingleFile { path, .. } => vec![path],
            DataSource::DualFile { objects, orders, .. } => vec![objects, orders],
            DataSource::Sushi { items, orders } => vec![items, orders],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DataSource::Synthetic(spec) => {
                let f = match spec.function {
                    SynthFunction::Linear { .. } => "linear",
                    SynthFunction::Quadratic { .. } => "quadratic",
                    SynthFunction::RandomMlp { .. } => "random network",
                };
                format!(
                    "synthetic {f}, {} pairs, {} features, seed {}",
                    spec.n_pairs, spec.n_features, spec.seed
                )
            }
            DataSource::SingleFile { path, .. } => format!("single file {}", path.display()),
            DataSource::DualFile { objects, orders, .. } => {
                format!("objects {} + orders {}", objects.display(), orders.display())
            }
            DataSource::Sushi { items, orders } => format!("sushi items {} + orders {}", items.display(), orders.display()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    /// Report as JSON.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Report as text.
    #[serde(default)]
    pub report_text: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<PathBuf>,
}

/// Everything needed to reproduce one experiment.
///
/// Randomness derives from `seed` unless a component sets its own:
/// the fold split uses `derive_label(seed, "split")`, the learner
/// `derive_label(seed, "learner")` and feature selection
/// `derive_label(seed, "selection")`. A synthetic source keeps its own seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DataSource,
    #[serde(default)]
    pub preprocess: PreprocessPlan,
    #[serde(default)]
    pub selection: Option<SelectionConfig>,
    pub learner: LearnerSpec,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Seeds actually used by a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSeeds {
    pub split: u64,
    pub learner: u64,
    pub selection: u64,
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let config: ExperimentConfig = crate::json::from_slice(bytes)?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file; relative paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&read(path)?)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.dataset.paths_mut().into_iter().for_each(fix);
        for p in [&mut self.output.report, &mut self.output.report_text, &mut self.output.model]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        if let Some(sel) = &self.selection {
            sel.validate()?;
        }
        if let DataSource::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        if let DataSource::SingleFile { options, .. } | DataSource::DualFile { options, .. } = &self.dataset {
            options.validate()?;
        }
        if let ValidationMode::KFold { k, .. } = self.validation.mode {
            if k < 2 {
                return Err(Error::InvalidParam(format!("k must be at least 2, got {k}")));
            }
        }
        Ok(())
    }

    /// Replace the global seed and drop every component seed so all
    /// randomness, synthetic data included, follows from `seed`.
    pub fn with_seed(&self, seed: u64) -> ExperimentConfig {
        let mut c = self.clone();
        c.seed = seed;
        c.learner = c.learner.without_seed();
        if let ValidationMode::KFold { seed: s, .. } = &mut c.validation.mode {
            *s = None;
        }
        if let Some(sel) = &mut c.selection {
            sel.seed = None;
            sel.learner = sel.learner.as_ref().map(LearnerSpec::without_seed);
            if let Some(ValidationSpec {
                mode: ValidationMode::KFold { seed: s, .. },
                ..
            }) = &mut sel.validation
            {
                *s = None;
            }
        }
        if let DataSource::Synthetic(spec) = &mut c.dataset {
            spec.seed = rng::derive_label(seed, "data");
            if let SynthFunction::RandomMlp { seed: s, .. } = &mut spec.function {
                *s = None;
            }
        }
        c
    }

    pub fn seeds(&self) -> ResolvedSeeds {
        let split = match self.validation.mode {
            ValidationMode::KFold { seed: Some(s), .. } => s,
            _ => rng::derive_label(self.seed, "split"),
        };
        let learner = if self.learner.has_explicit_seed() {
            self.learner.seed().unwrap_or(0)
        } else {
            rng::derive_label(self.seed, "learner")
        };
        let selection = self
            .selection
            .as_ref()
            .and_then(|s| s.seed)
            .unwrap_or_else(|| rng::derive_label(self.seed, "selection"));
        ResolvedSeeds {
            split,
            learner,
            selection,
        }
    }

    /// The learner with its seed resolved.
    pub fn resolved_learner(&self) -> LearnerSpec {
        self.learner.with_seed(self.seeds().learner)
    }

    /// Validation with its split seed resolved.
    pub fn resolved_validation(&self) -> ValidationSpec {
        let mut v = self.validation;
        if let ValidationMode::KFold { seed, .. } = &mut v.mode {
            *seed = Some(self.seeds().split);
        }
        v
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
