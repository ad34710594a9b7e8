//! Learner-agnostic training interface: one spec enum, one model enum.

use serde::{Deserialize, Serialize};

use crate::ann::{self, default_layers, BackpropConfig, MlpModel, NeuroConfig};
use crate::error::{Error, Result};
use crate::monitor::Monitor;
use crate::ranksvm::{self, SolverReport, SvmParams, SvmRankModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerSpec {
    RankSvm(SvmParams),
    Backprop {
        /// Hidden layer widths; omitted means one layer of 2× input width.
        #[serde(default)]
        hidden: Option<Vec<usize>>,
        #[serde(default)]
        config: BackpropConfig,
    },
    Neuro {
        #[serde(default)]
        hidden: Option<Vec<usize>>,
        #[serde(default)]
        config: NeuroConfig,
    },
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::RankSvm(_) => "rank_svm",
            LearnerSpec::Backprop { .. } => "backprop",
            LearnerSpec::Neuro { .. } => "neuro",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::RankSvm(p) => p.validate(),
            LearnerSpec::Backprop { config, hidden } => {
                check_hidden(hidden.as_deref())?;
                config.validate()
            }
            LearnerSpec::Neuro { config, hidden } => {
                check_hidden(hidden.as_deref())?;
                config.validate()
            }
        }
    }

    /// Effective seed of the stochastic trainers (the SVM solver is deterministic).
    pub fn seed(&self) -> Option<u64> {
        match self {
            LearnerSpec::RankSvm(_) => None,
            LearnerSpec::Backprop { config, .. } => Some(config.seed.unwrap_or(0)),
            LearnerSpec::Neuro { config, .. } => Some(config.seed.unwrap_or(0)),
        }
    }

    pub fn has_explicit_seed(&self) -> bool {
        match self {
            LearnerSpec::RankSvm(_) => true,
            LearnerSpec::Backprop { config, .. } => config.seed.is_some(),
            LearnerSpec::Neuro { config, .. } => config.seed.is_some(),
        }
    }

    /// Same learner with its seed cleared, so a pipeline derives it.
    pub fn without_seed(&self) -> LearnerSpec {
        let mut spec = self.clone();
        match &mut spec {
            LearnerSpec::RankSvm(_) => {}
            LearnerSpec::Backprop { config, .. } => config.seed = None,
            LearnerSpec::Neuro { config, .. } => config.seed = None,
        }
        spec
    }

    pub fn with_seed(&self, seed: u64) -> LearnerSpec {
        let mut spec = self.clone();
        match &mut spec {
            LearnerSpec::RankSvm(_) => {}
            LearnerSpec::Backprop { config, .. } => config.seed = Some(seed),
            LearnerSpec::Neuro { config, .. } => config.seed = Some(seed),
        }
        spec
    }

    /// Train on pairs of row positions into the numeric matrix `x`.
    pub fn fit(&self, x: &[Vec<f64>], pairs: &[(usize, usize)], monitor: &dyn Monitor) -> Result<Trained> {
        self.validate()?;
        let dim = x.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidParam("no features to train on".into()));
        }
        match self {
            LearnerSpec::RankSvm(params) => {
                let t = ranksvm::fit(x, pairs, params, monitor)?;
                Ok(Trained {
                    model: Model::RankSvm(t.model),
                    summary: TrainSummary::RankSvm(t.report),
                })
            }
            LearnerSpec::Backprop { hidden, config } => {
                let out = ann::backprop::fit(x, pairs, &default_layers(dim, hidden.as_deref()), config, monitor)?;
                Ok(Trained {
                    model: Model::Mlp(out.model),
                    summary: TrainSummary::Backprop {
                        final_loss: out.final_loss,
                    },
                })
            }
            LearnerSpec::Neuro { hidden, config } => {
                let out = ann::neuro::fit(x, pairs, &default_layers(dim, hidden.as_deref()), config, monitor)?;
                Ok(Trained {
                    model: Model::Mlp(out.model),
                    summary: TrainSummary::Neuro {
                        fitness: out.fitness,
                        generations: out.history.len() - 1,
                    },
                })
            }
        }
    }
}

fn check_hidden(hidden: Option<&[usize]>) -> Result<()> {
    if hidden.is_some_and(|h| h.contains(&0)) {
        return Err(Error::InvalidParam("hidden layers must have at least one unit".into()));
    }
    Ok(())
}

/// A trained utility model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Model {
    RankSvm(SvmRankModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn input_dim(&self) -> usize {
        match self {
            Model::RankSvm(m) => m.dim,
            Model::Mlp(m) => m.input_dim(),
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::RankSvm(m) => m.score(x),
            Model::Mlp(m) => m.forward(x),
        }
    }

    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Model::RankSvm(m) => m.score_unchecked(x),
            Model::Mlp(m) => m.forward_unchecked(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainSummary {
    RankSvm(SolverReport),
    Backprop { final_loss: f64 },
    Neuro { fitness: f64, generations: usize },
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: Model,
    pub summary: TrainSummary,
}
