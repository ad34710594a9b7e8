//! Validation protocols and ranking metrics.
//!
//! Cross-validation splits by *group* (one order = one group), so pairs drawn
//! from the same order never straddle the train/validation boundary.
//! Preprocessing is fitted on the training objects of each fold and replayed
//! on the held-out ones.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{extract_pairs, DataTable, Dataset, OrderKind, OrderSet, PreferenceSet};
use crate::error::{Error, Result};
use crate::learner::{LearnerSpec, Model, TrainSummary};
use crate::monitor::{Monitor, Scaled};
use crate::preprocess::{moments, FittedPlan, PreprocessPlan};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValidationMode {
    /// Train and evaluate on everything (optimistic).
    TrainingSet,
    /// `seed` unset: derived from the experiment seed.
    KFold {
        k: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    PairwiseAccuracy,
    SpearmanRho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationSpec {
    pub mode: ValidationMode,
    #[serde(default)]
    pub metric: Metric,
}

/// Three folds, split seed derived from the experiment seed.
impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec {
            mode: ValidationMode::KFold { k: 3, seed: None },
            metric: Metric::PairwiseAccuracy,
        }
    }
}

impl ValidationSpec {
    pub fn k_fold(k: usize, seed: u64) -> Self {
        ValidationSpec {
            mode: ValidationMode::KFold { k, seed: Some(seed) },
            metric: Metric::PairwiseAccuracy,
        }
    }

    pub fn training_set() -> Self {
        ValidationSpec {
            mode: ValidationMode::TrainingSet,
            metric: Metric::PairwiseAccuracy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
    pub durations_ms: Vec<f64>,
}

impl FoldResult {
    pub fn from_values(values: Vec<f64>, durations_ms: Vec<f64>) -> Self {
        let (mean, std) = if values.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            moments(&values)
        };
        FoldResult {
            values,
            mean,
            std,
            durations_ms,
        }
    }
}

/// Fraction of pairs whose preferred object scores higher; ties credit ½.
pub fn accuracy_from_scores(scores: &[f64], pairs: &[(usize, usize)]) -> f64 {
    let credit: f64 = pairs
        .iter()
        .map(|&(a, b)| match scores[a].partial_cmp(&scores[b]) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        })
        .sum();
    credit / pairs.len() as f64
}

pub fn pairwise_accuracy(score: impl Fn(&[f64]) -> f64, prefs: &PreferenceSet, table: &DataTable) -> Result<f64> {
    if prefs.is_empty() {
        return Err(Error::NoPairs("cannot score an empty preference set".into()));
    }
    let x = table.numeric_matrix()?;
    let pairs = prefs.indices(table)?;
    let scores: Vec<f64> = x.iter().map(|r| score(r)).collect();
    Ok(accuracy_from_scores(&scores, &pairs))
}

/// Shuffle the distinct groups with `seed` and deal them round-robin into `k` folds.
pub fn kfold_split(groups: &[i64], k: usize, seed: u64) -> Result<Vec<Vec<i64>>> {
    let mut seen = HashSet::new();
    let mut distinct: Vec<i64> = groups.iter().copied().filter(|g| seen.insert(*g)).collect();
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be at least 2, got {k}")));
    }
    if k > distinct.len() {
        return Err(Error::InvalidParam(format!(
            "k = {k} exceeds the number of groups ({})",
            distinct.len()
        )));
    }
    distinct.shuffle(&mut rng::rng(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, g) in distinct.into_iter().enumerate() {
        folds[i % k].push(g);
    }
    debug_assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), seen.len());
    Ok(folds)
}

/// Ranks for `values`, largest value = rank 1, ties share their average rank.
pub fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            ranks[p] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn has_ties(ranks: &[f64]) -> bool {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Spearman correlation between predicted scores (higher = better) and the
/// true ranks (1 = best).
pub fn spearman_rho(predicted_scores: &[f64], true_rank: &[f64]) -> Result<f64> {
    let n = predicted_scores.len();
    if n != true_rank.len() {
        return Err(Error::Dimension {
            expected: true_rank.len(),
            found: n,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParam("Spearman's rho needs at least two items".into()));
    }
    let predicted = descending_ranks(predicted_scores);
    let (_, sp) = moments(&predicted);
    let (_, st) = moments(true_rank);
    if sp == 0.0 || st == 0.0 {
        return Err(Error::InvalidParam("Spearman's rho is undefined for a constant ranking".into()));
    }
    if !has_ties(&predicted) && !has_ties(true_rank) {
        let d2: f64 = predicted.iter().zip(true_rank).map(|(a, b)| (a - b).powi(2)).sum();
        let n = n as f64;
        return Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)));
    }
    let (mp, _) = moments(&predicted);
    let (mt, _) = moments(true_rank);
    let cov: f64 = predicted.iter().zip(true_rank).map(|(a, b)| (a - mp) * (b - mt)).sum::<f64>() / n as f64;
    Ok(cov / (sp * st))
}

/// True ranks (1 = best) of an order's objects, in `order.ids()` order.
fn true_ranks(kind: &OrderKind, higher_is_better: bool) -> Vec<f64> {
    match kind {
        OrderKind::RankedList(ids) => (1..=ids.len()).map(|r| r as f64).collect(),
        OrderKind::Ratings(r) => {
            let sign = if higher_is_better { 1.0 } else { -1.0 };
            descending_ranks(&r.iter().map(|(_, l)| sign * l).collect::<Vec<_>>())
        }
    }
}

/// Trains one fold: fit preprocessing on the training objects, train the
/// learner, and return everything needed to score held-out objects.
pub struct FoldModel {
    pub plan: FittedPlan,
    pub model: Model,
    pub summary: TrainSummary,
    /// Preprocessed feature matrix for every object of the dataset.
    pub x: Vec<Vec<f64>>,
}

fn subset_orders(orders: &OrderSet, groups: &HashSet<i64>) -> OrderSet {
    OrderSet {
        orders: orders.orders.iter().filter(|o| groups.contains(&o.group)).cloned().collect(),
        higher_is_better: orders.higher_is_better,
    }
}

fn object_positions(table: &DataTable, orders: &OrderSet) -> Vec<usize> {
    let mut pos: Vec<usize> = orders
        .orders
        .iter()
        .flat_map(|o| o.ids().into_iter().filter_map(|id| table.position(id)).collect::<Vec<_>>())
        .collect();
    pos.sort_unstable();
    pos.dedup();
    pos
}

/// Fit `plan` on the objects of `train`, then train `learner` on its pairs.
pub fn train_on_orders(
    learner: &LearnerSpec,
    dataset: &Dataset,
    plan: &PreprocessPlan,
    train: &OrderSet,
    monitor: &dyn Monitor,
) -> Result<FoldModel> {
    let positions = object_positions(&dataset.table, train);
    let (fitted, _) = FittedPlan::fit(&dataset.table.subset(&positions), plan)?;
    let x = fitted.replay(&dataset.table)?.numeric_matrix()?;
    let pairs = extract_pairs(train).indices(&dataset.table)?;
    if pairs.is_empty() {
        return Err(Error::NoPairs("the training orders yield no preference pairs".into()));
    }
    let trained = learner.fit(&x, &pairs, monitor)?;
    Ok(FoldModel {
        plan: fitted,
        model: trained.model,
        summary: trained.summary,
        x,
    })
}

/// Evaluate `metric` on the held-out `test` orders.
pub fn evaluate_orders(model: &Model, x: &[Vec<f64>], table: &DataTable, test: &OrderSet, metric: Metric) -> Result<f64> {
    let positions = object_positions(table, test);
    let mut scores = vec![f64::NAN; x.len()];
    for p in positions {
        scores[p] = model.score_unchecked(&x[p]);
    }
    match metric {
        Metric::PairwiseAccuracy => {
            let pairs = extract_pairs(test).indices(table)?;
            if pairs.is_empty() {
                return Err(Error::NoPairs("the held-out orders yield no preference pairs".into()));
            }
            Ok(accuracy_from_scores(&scores, &pairs))
        }
        Metric::SpearmanRho => {
            let mut total = 0.0;
            let mut count = 0usize;
            for order in &test.orders {
                let predicted: Vec<f64> = order
                    .ids()
                    .into_iter()
                    .map(|id| table.position(id).map_or(f64::NAN, |p| scores[p]))
                    .collect();
                total += spearman_rho(&predicted, &true_ranks(&order.kind, test.higher_is_better))?;
                count += 1;
            }
            if count == 0 {
                return Err(Error::NoPairs("no held-out orders to rank".into()));
            }
            Ok(total / count as f64)
        }
    }
}

/// Fold assignment for `spec` over the dataset's groups, as (train, test) sets.
pub fn fold_groups(dataset: &Dataset, mode: ValidationMode, seed: u64) -> Result<Vec<(HashSet<i64>, HashSet<i64>)>> {
    let groups = dataset.orders.groups();
    match mode {
        ValidationMode::TrainingSet => {
            let all: HashSet<i64> = groups.into_iter().collect();
            Ok(vec![(all.clone(), all)])
        }
        ValidationMode::KFold { k, seed: own } => {
            let folds = kfold_split(&groups, k, own.unwrap_or(seed))?;
            Ok((0..folds.len())
                .map(|f| {
                    let test: HashSet<i64> = folds[f].iter().copied().collect();
                    let train = folds
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != f)
                        .flat_map(|(_, g)| g.iter().copied())
                        .collect();
                    (train, test)
                })
                .collect())
        }
    }
}

/// Cross-validate `learner` (behind `plan`) on `dataset`.
///
/// `seed` drives the fold split when `spec` leaves it unset; fold `f`
/// trains with learner seed `derive(learner_seed, f)`.
pub fn cross_validate(
    learner: &LearnerSpec,
    dataset: &Dataset,
    plan: &PreprocessPlan,
    spec: &ValidationSpec,
    seed: u64,
    monitor: &dyn Monitor,
) -> Result<FoldResult> {
    let folds = fold_groups(dataset, spec.mode, seed)?;
    let n = folds.len() as f64;
    let mut values = Vec::with_capacity(folds.len());
    let mut durations = Vec::with_capacity(folds.len());
    for (f, (train, test)) in folds.iter().enumerate() {
        if monitor.cancelled() {
            return Err(Error::Cancelled);
        }
        let start = Instant::now();
        let fold_learner = match learner.seed() {
            Some(s) => learner.with_seed(rng::derive(s, f as u64)),
            None => learner.clone(),
        };
        let scaled = Scaled {
            parent: monitor,
            start: f as f64 / n,
            width: 1.0 / n,
        };
        let value = (|| {
            let train_orders = subset_orders(&dataset.orders, train);
            let test_orders = subset_orders(&dataset.orders, test);
            let fm = train_on_orders(&fold_learner, dataset, plan, &train_orders, &scaled)?;
            evaluate_orders(&fm.model, &fm.x, &dataset.table, &test_orders, spec.metric)
        })()
        .map_err(|e| e.in_fold(f))?;
        values.push(value);
        durations.push(start.elapsed().as_secs_f64() * 1e3);
        monitor.progress((f + 1) as f64 / n);
    }
    Ok(FoldResult::from_values(values, durations))
}

/// k-fold cross-validation over ranked orders scored by mean Spearman ρ of
/// each held-out order; returns the per-fold means and their mean.
pub fn sushi_protocol(
    dataset: &Dataset,
    learner: &LearnerSpec,
    plan: &PreprocessPlan,
    k: usize,
    seed: u64,
    monitor: &dyn Monitor,
) -> Result<FoldResult> {
    let spec = ValidationSpec {
        mode: ValidationMode::KFold { k, seed: Some(seed) },
        metric: Metric::SpearmanRho,
    };
    cross_validate(learner, dataset, plan, &spec, seed, monitor)
}
