use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::ExperimentConfig;
use super::model_file::{save_model, ModelFile, ModelMetadata};
use super::report::{Phase, PhaseSummary, Report, RunStatus};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, train_on_orders, ValidationMode};
use crate::featsel::{run_selection, Evaluator, Selection, SelectionConfig, Strategy};
use crate::monitor::{CancelFlag, Monitor};
use crate::preprocess::{compute_stats, FittedPlan, PreprocessPlan};
use crate::rng;

/// One progress update. Events of a run are monotone in
/// `(phase_index, percent)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub seq: u64,
    pub phase: Phase,
    pub phase_index: usize,
    /// Completion of the current phase, 0 to 100.
    pub percent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Receives progress events; calls never overlap.
pub trait Observer: Sync {
    fn event(&self, event: &ProgressEvent);
}

impl<F: Fn(&ProgressEvent) + Sync> Observer for F {
    fn event(&self, event: &ProgressEvent) {
        self(event)
    }
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn event(&self, _: &ProgressEvent) {}
}

pub struct ExperimentOutcome {
    pub report: Report,
    /// Final model trained on every order; absent unless the run completed.
    pub model: Option<ModelFile>,
}

impl ExperimentOutcome {
    pub fn completed(&self) -> bool {
        self.report.status == RunStatus::Completed
    }
}

/// Smallest percent step worth an event without a message.
const MIN_STEP: f64 = 0.5;

struct EmitState {
    seq: u64,
    phase: usize,
    percent: f64,
    log: Vec<String>,
}

struct Emitter<'a> {
    observer: &'a dyn Observer,
    cancel: &'a CancelFlag,
    state: Mutex<EmitState>,
}

impl Emitter<'_> {
    fn emit(&self, phase: Phase, percent: f64, message: Option<String>) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let idx = phase.index();
        if idx < st.phase {
            return;
        }
        let mut percent = percent.clamp(0.0, 100.0);
        if idx == st.phase {
            if message.is_none() && percent < st.percent + MIN_STEP && !(percent == 100.0 && st.percent < 100.0) {
                return;
            }
            percent = percent.max(st.percent);
        }
        st.phase = idx;
        st.percent = percent;
        st.seq += 1;
        if let Some(m) = &message {
            st.log.push(m.clone());
        }
        let event = ProgressEvent {
            seq: st.seq,
            phase,
            phase_index: idx,
            percent,
            message,
        };
        // Delivered under the lock, so observers see one event at a time.
        self.observer.event(&event);
    }

    fn log(&self, phase: Phase, message: impl Into<String>) {
        let percent = {
            let st = self.state.lock().unwrap_or_else(|e| e.into_inner());
            if st.phase == phase.index() {
                st.percent
            } else {
                0.0
            }
        };
        self.emit(phase, percent, Some(message.into()));
    }

    fn take_log(&self) -> Vec<String> {
        std::mem::take(&mut self.state.lock().unwrap_or_else(|e| e.into_inner()).log)
    }
}

struct PhaseMonitor<'a> {
    emitter: &'a Emitter<'a>,
    phase: Phase,
    start: f64,
    width: f64,
}

impl Monitor for PhaseMonitor<'_> {
    fn cancelled(&self) -> bool {
        self.emitter.cancel.is_cancelled()
    }

    fn progress(&self, fraction: f64) {
        self.emitter
            .emit(self.phase, 100.0 * (self.start + self.width * fraction.clamp(0.0, 1.0)), None);
    }
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    emitter: Emitter<'a>,
    report: Report,
    started: Instant,
}

impl<'a> Run<'a> {
    fn monitor(&self, phase: Phase, start: f64, width: f64) -> PhaseMonitor<'_> {
        PhaseMonitor {
            emitter: &self.emitter,
            phase,
            start,
            width,
        }
    }

    /// Run one phase, recording its summary whether it succeeds or not.
    fn phase<T>(&mut self, phase: Phase, body: impl FnOnce(&Self, &mut Map<String, Value>) -> Result<T>) -> Result<T> {
        if self.emitter.cancel.is_cancelled() {
            return Err(Error::Cancelled);
        }
        let start = Instant::now();
        self.emitter.emit(phase, 0.0, Some(format!("{} started", phase.title())));
        let mut details = Map::new();
        let out = body(self, &mut details);
        match &out {
            Ok(_) => self.emitter.emit(phase, 100.0, Some(format!("{} finished", phase.title()))),
            Err(Error::Cancelled) => self.emitter.log(phase, "cancelled"),
            Err(e) => self.emitter.log(phase, format!("error: {e}")),
        }
        self.report.phases.push(PhaseSummary {
            phase,
            details,
            log: self.emitter.take_log(),
            duration_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        out
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Run the five phases of `config`: load, preprocess, optional feature
/// selection, cross-validation plus final training, and report.
///
/// Failures and cancellation do not return `Err`: they end the run with the
/// corresponding status and whatever phases completed.
pub fn run_experiment(config: &ExperimentConfig, observer: &dyn Observer, cancel: &CancelFlag) -> ExperimentOutcome {
    let seeds = config.seeds();
    let mut run = Run {
        config,
        emitter: Emitter {
            observer,
            cancel,
            state: Mutex::new(EmitState {
                seq: 0,
                phase: 0,
                percent: 0.0,
                log: Vec::new(),
            }),
        },
        report: Report {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: now(),
            status: RunStatus::Completed,
            config: config.clone(),
            config_hash: config.hash(),
            seeds,
            phases: Vec::new(),
            selection: None,
            metric: config.validation.metric,
            validation: None,
            average: None,
            final_training: None,
            total_duration_ms: 0.0,
        },
        started: Instant::now(),
    };
    let mut current = Phase::Load;
    let result = pipeline(&mut run, &mut current);
    let model = match result {
        Ok(model) => Some(model),
        Err(Error::Cancelled) => {
            run.report.status = RunStatus::Cancelled { phase: current };
            None
        }
        Err(e) => {
            run.report.status = RunStatus::Failed {
                phase: current,
                message: e.to_string(),
            };
            None
        }
    };
    run.report.total_duration_ms = run.started.elapsed().as_secs_f64() * 1e3;
    ExperimentOutcome {
        report: run.report,
        model,
    }
}

fn pipeline(run: &mut Run<'_>, current: &mut Phase) -> Result<ModelFile> {
    let config = run.config;
    config.validate()?;

    let dataset: Dataset = run.phase(Phase::Load, |_, d| {
        let dataset = config.dataset.load()?;
        d.insert("source".into(), json!(config.dataset.describe()));
        d.insert("objects".into(), json!(dataset.table.len()));
        d.insert("features".into(), json!(dataset.table.schema().names().collect::<Vec<_>>()));
        d.insert("orders".into(), json!(dataset.orders.orders.len()));
        d.insert("pairs".into(), json!(dataset.preferences().len()));
        Ok(dataset)
    })?;

    *current = Phase::Preprocess;
    run.phase(Phase::Preprocess, |_, d| {
        let stats = compute_stats(&dataset.table)?;
        let (_, out) = FittedPlan::fit(&dataset.table, &config.preprocess)?;
        out.numeric_matrix()?;
        d.insert("steps".into(), serde_json::to_value(&config.preprocess).expect("plan serializes"));
        d.insert("features_after".into(), json!(out.schema().names().collect::<Vec<_>>()));
        d.insert("stats".into(), serde_json::to_value(&stats).expect("stats serialize"));
        Ok(())
    })?;

    *current = Phase::FeatureSelection;
    let learner = config.resolved_learner();
    let validation = config.resolved_validation();
    let selection: Option<Selection> = run.phase(Phase::FeatureSelection, |run, d| {
        let Some(sel) = &config.selection else {
            d.insert("skipped".into(), json!(true));
            return Ok(None);
        };
        let evaluator = selection_evaluator(config, sel);
        let strategy = match sel.strategy {
            Strategy::NBest { n } => format!("n-best, n = {n}"),
            Strategy::Sfs {
                max_features,
                min_improvement,
            } => format!("sequential forward, at most {max_features} features, min improvement {min_improvement}"),
        };
        run.emitter.log(Phase::FeatureSelection, format!("strategy: {strategy}"));
        let result = run_selection(&dataset, &sel.strategy, &evaluator, &run.monitor(Phase::FeatureSelection, 0.0, 1.0))?;
        for step in &result.trace {
            run.emitter
                .log(Phase::FeatureSelection, format!("{} {} {:.6}", step.round, step.feature, step.score));
        }
        d.insert("strategy".into(), json!(strategy));
        d.insert("learner".into(), json!(evaluator.learner.name()));
        d.insert("selected".into(), json!(result.selected));
        d.insert("stop_reason".into(), json!(result.stop_reason));
        Ok(Some(result))
    })?;
    let plan: PreprocessPlan = match &selection {
        Some(s) => config.preprocess.then_include(&s.selected),
        None => config.preprocess.clone(),
    };
    run.report.selection = selection;

    *current = Phase::Training;
    let (folds, fm) = run.phase(Phase::Training, |run, d| {
        d.insert("learner".into(), serde_json::to_value(&learner).expect("learner serializes"));
        d.insert("validation".into(), serde_json::to_value(validation).expect("validation serializes"));
        let cv = cross_validate(
            &learner,
            &dataset,
            &plan,
            &validation,
            config.seeds().split,
            &run.monitor(Phase::Training, 0.0, 0.8),
        )?;
        for (i, v) in cv.values.iter().enumerate() {
            run.emitter.log(Phase::Training, format!("fold {} {:.6}", i + 1, v));
        }
        run.emitter.log(Phase::Training, "training the final model on all orders");
        let fm = train_on_orders(&learner, &dataset, &plan, &dataset.orders, &run.monitor(Phase::Training, 0.8, 0.2))?;
        d.insert("fold_values".into(), json!(cv.values));
        d.insert("mean".into(), json!(cv.mean));
        Ok((cv, fm))
    })?;
    run.report.average = Some(folds.mean);
    run.report.validation = Some(folds);
    run.report.final_training = Some(fm.summary.clone());

    *current = Phase::Report;
    let hash = run.report.config_hash.clone();
    let model = run.phase(Phase::Report, |_, d| {
        let out = fm.plan.replay(&dataset.table)?;
        let features: Vec<String> = out.schema().names().map(String::from).collect();
        d.insert("model".into(), json!(learner.name()));
        d.insert("model_inputs".into(), json!(features.len()));
        Ok(ModelFile::new(
            fm.plan.clone(),
            fm.model.clone(),
            ModelMetadata {
                learner: learner.name().to_string(),
                features,
                config_hash: Some(hash),
                seed: Some(config.seed),
                created: now(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                training: Some(fm.summary.clone()),
            },
        ))
    })?;
    Ok(model)
}

fn selection_evaluator(config: &ExperimentConfig, sel: &SelectionConfig) -> Evaluator {
    let seed = config.seeds().selection;
    let learner = match &sel.learner {
        Some(l) if l.has_explicit_seed() => l.clone(),
        Some(l) => l.with_seed(rng::derive_label(seed, "learner")),
        None => config.resolved_learner(),
    };
    let mut validation = sel.validation.unwrap_or_else(|| config.resolved_validation());
    if let ValidationMode::KFold { seed: s @ None, .. } = &mut validation.mode {
        *s = Some(rng::derive_label(seed, "split"));
    }
    Evaluator {
        learner,
        validation,
        plan: config.preprocess.clone(),
        seed,
    }
}

/// Only the selection phase of `config`, as its own run would perform it.
pub fn select_features(config: &ExperimentConfig, monitor: &dyn Monitor) -> Result<Selection> {
    config.validate()?;
    let sel = config
        .selection
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("the config has no selection section".into()))?;
    let dataset = config.dataset.load()?;
    run_selection(&dataset, &sel.strategy, &selection_evaluator(config, sel), monitor)
}

/// Write the report (JSON and text) and the model to the configured paths.
/// Nothing is written for the model unless the run completed.
/// Parent directories are created as needed.
pub fn write_outputs(outcome: &ExperimentOutcome, config: &ExperimentConfig) -> Result<()> {
    let o = &config.output;
    for p in [&o.report, &o.report_text, &o.model].into_iter().flatten() {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(Error::file(dir))?;
        }
    }
    if let Some(p) = &config.output.report {
        std::fs::write(p, outcome.report.to_json()).map_err(Error::file(p))?;
    }
    if let Some(p) = &config.output.report_text {
        std::fs::write(p, outcome.report.to_text()).map_err(Error::file(p))?;
    }
    if let (Some(p), Some(model)) = (&config.output.model, &outcome.model) {
        save_model(model, p)?;
    }
    Ok(())
}
