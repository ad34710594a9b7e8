//! Benchmark reproduction: run a manifest of experiment configs and compare
//! their results against pinned thresholds.
//!
//! A manifest lists named runs (each an experiment config file) and checks
//! over their reports. Runs marked `optional` whose input files are missing
//! are skipped and their checks reported as waived.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentConfig, ExperimentOutcome, ModelFile, NoObserver, RunStatus};
use crate::monitor::CancelFlag;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub name: String,
    pub config: PathBuf,
    /// Skip (and waive dependent checks) when the dataset files are absent.
    #[serde(default)]
    pub optional: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckKind {
    /// The run's average is at least `value`.
    AtLeast { run: String, value: f64 },
    /// Some run in `runs` beats `baseline`'s average by at least `value`.
    Margin {
        runs: Vec<String>,
        baseline: String,
        value: f64,
    },
    /// Some run in `runs` has an average in `[low, high]`.
    AnyWithin { runs: Vec<String>, low: f64, high: f64 },
    /// The run's total wall-clock time is below `value` seconds.
    MaxSeconds { run: String, value: f64 },
    /// Rerunning the config gives the same report modulo timing.
    Deterministic { run: String },
    /// The model survives a JSON round trip with bit-identical scores.
    ModelRoundTrip { run: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: String,
    #[serde(flatten)]
    pub kind: CheckKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: Vec<RunEntry>,
    pub checks: Vec<Check>,
}

impl Manifest {
    /// Load a manifest; config paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Manifest> {
        let bytes = std::fs::read(path).map_err(Error::file(path))?;
        let mut m: Manifest = crate::json::from_slice(&bytes)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut m.runs {
            if r.config.is_relative() {
                r.config = base.join(&r.config);
            }
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let names: Vec<&str> = self.runs.iter().map(|r| r.name.as_str()).collect();
        for c in &self.checks {
            for r in c.kind.runs() {
                if !names.contains(&r) {
                    return Err(Error::InvalidParam(format!(
                        "check '{}' references unknown run '{r}'",
                        c.criterion
                    )));
                }
            }
        }
        Ok(())
    }
}

impl CheckKind {
    fn runs(&self) -> Vec<&str> {
        match self {
            CheckKind::AtLeast { run, .. }
            | CheckKind::MaxSeconds { run, .. }
            | CheckKind::Deterministic { run }
            | CheckKind::ModelRoundTrip { run } => vec![run],
            CheckKind::Margin { runs, baseline, .. } => runs.iter().chain([baseline]).map(String::as_str).collect(),
            CheckKind::AnyWithin { runs, .. } => runs.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Waived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub criterion: String,
    pub check: String,
    pub observed: String,
    pub threshold: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    /// `None` when skipped.
    pub average: Option<f64>,
    pub seconds: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub runs: Vec<RunResult>,
    pub checks: Vec<CheckResult>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>10} {:>9}  status", "run", "average", "seconds");
        for r in &self.runs {
            let avg = r.average.map_or("-".into(), |a| format!("{a:.4}"));
            let secs = r.seconds.map_or("-".into(), |s| format!("{s:.1}"));
            let _ = writeln!(out, "{:<28} {avg:>10} {secs:>9}  {}", r.name, r.status);
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<7} {:<22} {:<44} {:<22} threshold",
            "verdict", "criterion", "check", "observed"
        );
        for c in &self.checks {
            let v = match c.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Waived => "WAIVED",
            };
            let _ = writeln!(
                out,
                "{v:<7} {:<22} {:<44} {:<22} {}",
                c.criterion, c.check, c.observed, c.threshold
            );
        }
        out
    }
}

enum Ran {
    Skipped(String),
    Done {
        config: Box<ExperimentConfig>,
        outcome: Box<ExperimentOutcome>,
    },
    Broken(String),
}

fn execute(entry: &RunEntry, seed: Option<u64>) -> Ran {
    let config = match ExperimentConfig::from_file(&entry.config) {
        Ok(c) => c,
        Err(e) => return Ran::Broken(e.to_string()),
    };
    let config = match seed {
        Some(s) => config.with_seed(s),
        None => config,
    };
    if entry.optional {
        if let Some(p) = config.dataset.paths().into_iter().find(|p| !p.exists()) {
            return Ran::Skipped(format!("skipped: {} not found", p.display()));
        }
    }
    log::info!("running {}", entry.name);
    let outcome = run_experiment(&config, &NoObserver, &CancelFlag::new());
    Ran::Done {
        config: Box::new(config),
        outcome: Box::new(outcome),
    }
}

fn average(ran: &Ran) -> std::result::Result<f64, Verdict> {
    match ran {
        Ran::Skipped(_) => Err(Verdict::Waived),
        Ran::Broken(_) => Err(Verdict::Fail),
        Ran::Done { outcome, .. } => outcome.report.average.ok_or(Verdict::Fail),
    }
}

fn model_round_trip(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<bool> {
    let Some(model) = &outcome.model else {
        return Ok(false);
    };
    let back = ModelFile::from_json(model.to_json().as_bytes())?;
    let table = config.dataset.load()?.table;
    let a = model.score_table(&table)?;
    let b = back.score_table(&table)?;
    Ok(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()))
}

fn evaluate(check: &Check, runs: &BTreeMap<String, Ran>, entries: &[RunEntry], seed: Option<u64>) -> CheckResult {
    let result = |name: &str, observed: String, threshold: String, verdict: Verdict| CheckResult {
        criterion: check.criterion.clone(),
        check: name.to_string(),
        observed,
        threshold,
        verdict,
    };
    let pass = |ok: bool| if ok { Verdict::Pass } else { Verdict::Fail };
    let missing = |v: Verdict| if v == Verdict::Waived { "skipped" } else { "no result" }.to_string();
    match &check.kind {
        CheckKind::AtLeast { run, value } => match average(&runs[run]) {
            Ok(a) => result(&format!("{run} average"), format!("{a:.4}"), format!(">= {value}"), pass(a >= *value)),
            Err(v) => result(&format!("{run} average"), missing(v), format!(">= {value}"), v),
        },
        CheckKind::Margin { runs: rs, baseline, value } => {
            let name = format!("{} - {baseline}", rs.join("|"));
            let base = match average(&runs[baseline]) {
                Ok(b) => b,
                Err(v) => return result(&name, missing(v), format!(">= {value}"), v),
            };
            let best = rs.iter().filter_map(|r| average(&runs[r]).ok()).fold(f64::NEG_INFINITY, f64::max);
            if best == f64::NEG_INFINITY {
                return result(&name, "no result".into(), format!(">= {value}"), Verdict::Fail);
            }
            let gap = best - base;
            result(&name, format!("{gap:.4}"), format!(">= {value}"), pass(gap >= *value))
        }
        CheckKind::AnyWithin { runs: rs, low, high } => {
            let name = format!("any of {} average", rs.join("|"));
            let threshold = format!("in [{low}, {high}]");
            let values: Vec<std::result::Result<f64, Verdict>> = rs.iter().map(|r| average(&runs[r])).collect();
            if values.iter().all(|v| *v == Err(Verdict::Waived)) {
                return result(&name, "skipped".into(), threshold, Verdict::Waived);
            }
            let ok: Vec<f64> = values.iter().filter_map(|v| v.ok()).collect();
            let observed = ok.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ");
            let hit = ok.iter().any(|v| (*low..=*high).contains(v));
            result(&name, observed, threshold, pass(hit))
        }
        CheckKind::MaxSeconds { run, value } => {
            let name = format!("{run} seconds");
            match &runs[run] {
                Ran::Done { outcome, .. } => {
                    let s = outcome.report.total_duration_ms / 1e3;
                    result(&name, format!("{s:.1}"), format!("< {value}"), pass(s < *value))
                }
                Ran::Skipped(_) => result(&name, "skipped".into(), format!("< {value}"), Verdict::Waived),
                Ran::Broken(e) => result(&name, e.clone(), format!("< {value}"), Verdict::Fail),
            }
        }
        CheckKind::Deterministic { run } => {
            let name = format!("{run} rerun identical");
            let Ran::Done { outcome, .. } = &runs[run] else {
                let v = average(&runs[run]).err().unwrap_or(Verdict::Fail);
                return result(&name, missing(v), "identical".into(), v);
            };
            let entry = entries.iter().find(|e| &e.name == run).expect("validated");
            let again = match execute(entry, seed) {
                Ran::Done { outcome, .. } => outcome,
                _ => return result(&name, "rerun failed".into(), "identical".into(), Verdict::Fail),
            };
            let same = outcome.report.body_without_timing() == again.report.body_without_timing();
            let observed = if same { "identical" } else { "differs" };
            result(&name, observed.into(), "identical".into(), pass(same))
        }
        CheckKind::ModelRoundTrip { run } => {
            let name = format!("{run} model round trip");
            match &runs[run] {
                Ran::Done { config, outcome } => match model_round_trip(config, outcome) {
                    Ok(ok) => {
                        let observed = if ok { "bit-identical" } else { "differs" };
                        result(&name, observed.into(), "bit-identical".into(), pass(ok))
                    }
                    Err(e) => result(&name, e.to_string(), "bit-identical".into(), Verdict::Fail),
                },
                Ran::Skipped(_) => result(&name, "skipped".into(), "bit-identical".into(), Verdict::Waived),
                Ran::Broken(e) => result(&name, e.clone(), "bit-identical".into(), Verdict::Fail),
            }
        }
    }
}

/// Run every entry of `manifest` (with `seed` overriding config seeds when
/// given) and evaluate its checks.
pub fn reproduce(manifest: &Manifest, seed: Option<u64>) -> Reproduction {
    let mut runs = BTreeMap::new();
    let mut results = Vec::new();
    for entry in &manifest.runs {
        let ran = execute(entry, seed);
        let (average, seconds, status) = match &ran {
            Ran::Skipped(msg) => (None, None, msg.clone()),
            Ran::Broken(e) => (None, None, format!("error: {e}")),
            Ran::Done { outcome, .. } => {
                let status = match &outcome.report.status {
                    RunStatus::Completed => "completed".to_string(),
                    RunStatus::Cancelled { .. } => "cancelled".to_string(),
                    RunStatus::Failed { message, .. } => format!("error: {message}"),
                };
                (outcome.report.average, Some(outcome.report.total_duration_ms / 1e3), status)
            }
        };
        results.push(RunResult {
            name: entry.name.clone(),
            average,
            seconds,
            status,
        });
        runs.insert(entry.name.clone(), ran);
    }
    let checks = manifest
        .checks
        .iter()
        .map(|c| evaluate(c, &runs, &manifest.runs, seed))
        .collect();
    Reproduction { runs: results, checks }
}
