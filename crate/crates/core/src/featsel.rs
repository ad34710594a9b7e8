//! Wrapper feature selection: candidate subsets are scored by the
//! cross-validated accuracy of a learner trained on them alone.
//!
//! Every candidate is scored with the same evaluator seed, so a candidate's
//! score does not depend on when or where it was evaluated and parallel
//! rounds reproduce the sequential result.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, ValidationSpec};
use crate::learner::LearnerSpec;
use crate::monitor::{CancelOnly, Monitor, Silent};
use crate::preprocess::{FittedPlan, PreprocessPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Strategy {
    NBest {
        n: usize,
    },
    Sfs {
        max_features: usize,
        /// Stop once the best candidate improves the score by no more than this.
        #[serde(default)]
        min_improvement: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    /// Learner used to score subsets; unset reuses the experiment's learner.
    /// Typically a cheaper budget of the same family.
    #[serde(default)]
    pub learner: Option<LearnerSpec>,
    /// Unset reuses the experiment's validation.
    #[serde(default)]
    pub validation: Option<ValidationSpec>,
    /// Unset derives from the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        match self.strategy {
            Strategy::NBest { n: 0 } => Err(Error::InvalidParam("n must be at least 1".into())),
            Strategy::Sfs { max_features: 0, .. } => {
                Err(Error::InvalidParam("max_features must be at least 1".into()))
            }
            Strategy::Sfs { min_improvement, .. } if !(min_improvement >= 0.0) => Err(Error::InvalidParam(format!(
                "min_improvement must be non-negative, got {min_improvement}"
            ))),
            _ => match &self.learner {
                Some(l) => l.validate(),
                None => Ok(()),
            },
        }
    }
}

/// How a subset is scored: `plan` followed by an include step for the subset,
/// then cross-validation of `learner`.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub learner: LearnerSpec,
    pub validation: ValidationSpec,
    pub plan: PreprocessPlan,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub round: usize,
    pub feature: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub selected: Vec<String>,
    /// N-best: one entry per feature in rank order (`round` is the rank).
    /// SFS: one entry per accepted round, scoring the subset after the addition.
    pub trace: Vec<SelectionStep>,
    pub stop_reason: String,
}

/// Features available for selection: those produced by the evaluator's plan.
pub fn candidate_features(dataset: &Dataset, evaluator: &Evaluator) -> Result<Vec<String>> {
    let (_, out) = FittedPlan::fit(&dataset.table, &evaluator.plan)?;
    Ok(out.schema().names().map(String::from).collect())
}

/// Mean validation score of the learner trained on `subset` only.
pub fn score_subset(subset: &[String], dataset: &Dataset, evaluator: &Evaluator) -> Result<f64> {
    score_with(subset, dataset, evaluator, &Silent)
}

fn score_with(subset: &[String], dataset: &Dataset, evaluator: &Evaluator, monitor: &dyn Monitor) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::InvalidParam("cannot score an empty feature subset".into()));
    }
    let plan = evaluator.plan.then_include(subset);
    let result = cross_validate(
        &evaluator.learner,
        dataset,
        &plan,
        &evaluator.validation,
        evaluator.seed,
        monitor,
    )?;
    Ok(result.mean)
}

/// Score each candidate subset in parallel; results keep input order.
fn score_all(
    subsets: &[Vec<String>],
    dataset: &Dataset,
    evaluator: &Evaluator,
    monitor: &dyn Monitor,
    done: &AtomicUsize,
    total: usize,
) -> Result<Vec<f64>> {
    subsets
        .par_iter()
        .map(|s| {
            let v = score_with(s, dataset, evaluator, &CancelOnly(monitor))?;
            let d = done.fetch_add(1, Ordering::SeqCst) + 1;
            monitor.progress(d as f64 / total as f64);
            Ok(v)
        })
        .collect()
}

/// Index of the highest score; the earliest wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Score each feature alone and keep the `n` best (ties in schema order).
pub fn n_best(dataset: &Dataset, n: usize, evaluator: &Evaluator, monitor: &dyn Monitor) -> Result<Selection> {
    if n == 0 {
        return Err(Error::InvalidParam("n must be at least 1".into()));
    }
    let features = candidate_features(dataset, evaluator)?;
    let singles: Vec<Vec<String>> = features.iter().map(|f| vec![f.clone()]).collect();
    let done = AtomicUsize::new(0);
    let scores = score_all(&singles, dataset, evaluator, monitor, &done, features.len())?;
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let trace: Vec<SelectionStep> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| SelectionStep {
            round: rank + 1,
            feature: features[i].clone(),
            score: scores[i],
        })
        .collect();
    let selected = trace.iter().take(n).map(|s| s.feature.clone()).collect();
    Ok(Selection {
        selected,
        trace,
        stop_reason: format!("kept the {} best of {} features", n.min(features.len()), features.len()),
    })
}

/// Sequential forward selection.
pub fn sfs(
    dataset: &Dataset,
    max_features: usize,
    min_improvement: f64,
    evaluator: &Evaluator,
    monitor: &dyn Monitor,
) -> Result<Selection> {
    if max_features == 0 {
        return Err(Error::InvalidParam("max_features must be at least 1".into()));
    }
    let features = candidate_features(dataset, evaluator)?;
    let cap = max_features.min(features.len());
    // Total candidate evaluations if every round runs.
    let total: usize = (0..cap).map(|r| features.len() - r).sum();
    let done = AtomicUsize::new(0);

    let mut selected: Vec<String> = Vec::new();
    let mut trace = Vec::new();
    let mut current: Option<f64> = None;
    let stop_reason = loop {
        if selected.len() >= max_features {
            break format!("reached max_features = {max_features}");
        }
        let remaining: Vec<&String> = features.iter().filter(|f| !selected.contains(f)).collect();
        if remaining.is_empty() {
            break "no features remain".to_string();
        }
        let subsets: Vec<Vec<String>> = remaining
            .iter()
            .map(|f| {
                let mut s = selected.clone();
                s.push((*f).clone());
                s
            })
            .collect();
        let scores = score_all(&subsets, dataset, evaluator, monitor, &done, total)?;
        let best = argmax(&scores);
        if let Some(prev) = current {
            let gain = scores[best] - prev;
            if gain <= min_improvement {
                break format!("best improvement {gain:.6} did not exceed {min_improvement}");
            }
        }
        selected.push(remaining[best].clone());
        current = Some(scores[best]);
        trace.push(SelectionStep {
            round: trace.len() + 1,
            feature: remaining[best].clone(),
            score: scores[best],
        });
    };
    monitor.progress(1.0);
    Ok(Selection {
        selected,
        trace,
        stop_reason,
    })
}

pub fn run_selection(dataset: &Dataset, strategy: &Strategy, evaluator: &Evaluator, monitor: &dyn Monitor) -> Result<Selection> {
    match *strategy {
        Strategy::NBest { n } => n_best(dataset, n, evaluator, monitor),
        Strategy::Sfs {
            max_features,
            min_improvement,
        } => sfs(dataset, max_features, min_improvement, evaluator, monitor),
    }
}
