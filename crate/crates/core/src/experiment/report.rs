use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::{ExperimentConfig, ResolvedSeeds};
use crate::error::Result;
use crate::evaluation::{FoldResult, Metric};
use crate::featsel::Selection;
use crate::learner::TrainSummary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Load,
    Preprocess,
    FeatureSelection,
    Training,
    Report,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Load,
        Phase::Preprocess,
        Phase::FeatureSelection,
        Phase::Training,
        Phase::Report,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn title(self) -> &'static str {
        match self {
            Phase::Load => "Load",
            Phase::Preprocess => "Preprocess",
            Phase::FeatureSelection => "Feature selection",
            Phase::Training => "Training and validation",
            Phase::Report => "Report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Cancelled { phase: Phase },
    Failed { phase: Phase, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: Phase,
    /// Configuration and outcome of the phase, keyed by name.
    pub details: Map<String, Value>,
    pub log: Vec<String>,
    pub duration_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub timestamp: String,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: ResolvedSeeds,
    pub phases: Vec<PhaseSummary>,
    pub selection: Option<Selection>,
    pub metric: Metric,
    pub validation: Option<FoldResult>,
    /// Mean of `validation.values`.
    pub average: Option<f64>,
    pub final_training: Option<TrainSummary>,
    pub total_duration_ms: f64,
}

/// Keys whose values depend on the clock rather than the configuration.
pub const TIMING_KEYS: [&str; 4] = ["timestamp", "duration_ms", "durations_ms", "total_duration_ms"];

fn strip(value: &mut Value) {
    match value {
        Value::Object(map) => {
            for k in TIMING_KEYS {
                map.remove(k);
            }
            map.values_mut().for_each(strip);
        }
        Value::Array(items) => items.iter_mut().for_each(strip),
        _ => {}
    }
}

fn metric_label(metric: Metric) -> &'static str {
    match metric {
        Metric::PairwiseAccuracy => "pairwise accuracy",
        Metric::SpearmanRho => "Spearman rho",
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:.6}"),
            _ => n.to_string(),
        },
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            items.iter().map(render_value).collect::<Vec<_>>().join(", ")
        }
        other => other.to_string(),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Report> {
        crate::json::from_slice(bytes)
    }

    /// The JSON body with every clock-dependent field removed.
    pub fn body_without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        strip(&mut v);
        v
    }

    pub fn phase(&self, phase: Phase) -> Option<&PhaseSummary> {
        self.phases.iter().find(|p| p.phase == phase)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "Experiment report");
        let _ = writeln!(w, "tool version {}, generated {}", self.tool_version, self.timestamp);
        let _ = writeln!(w, "config hash {}", self.config_hash);
        let status = match &self.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Cancelled { phase } => format!("cancelled during {}", phase.title()),
            RunStatus::Failed { phase, message } => format!("failed during {}: {message}", phase.title()),
        };
        let _ = writeln!(w, "status: {status}");
        for p in &self.phases {
            let _ = writeln!(w);
            let _ = writeln!(w, "[{}] {} ({:.1} ms)", p.phase.index() + 1, p.phase.title(), p.duration_ms);
            for (k, v) in &p.details {
                if k == "stats" {
                    continue;
                }
                let _ = writeln!(w, "  {k}: {}", render_value(v));
            }
            for line in &p.log {
                let _ = writeln!(w, "  > {line}");
            }
        }
        if let Some(sel) = &self.selection {
            let _ = writeln!(w);
            let _ = writeln!(w, "Feature selection trace");
            for s in &sel.trace {
                let _ = writeln!(w, "  {:>3}  {:<24} {:.6}", s.round, s.feature, s.score);
            }
            let _ = writeln!(w, "  selected: {}", sel.selected.join(", "));
            let _ = writeln!(w, "  stopped: {}", sel.stop_reason);
        }
        if let Some(v) = &self.validation {
            let label = metric_label(self.metric);
            let _ = writeln!(w);
            let _ = writeln!(w, "Model {label} per fold");
            for (i, value) in v.values.iter().enumerate() {
                let ms = v.durations_ms.get(i).copied().unwrap_or(f64::NAN);
                let _ = writeln!(w, "  fold {:>2}  {value:.6}  ({ms:.1} ms)", i + 1);
            }
            if let Some(avg) = self.average {
                let _ = writeln!(w, "Average method {label}: {avg:.6} (std {:.6})", v.std);
            }
        }
        out
    }
}
