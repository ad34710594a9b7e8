use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use preflearn::experiment::{run_experiment, ExperimentConfig, ModelFile, Phase, ProgressEvent, Report, RunStatus};
use preflearn::monitor::CancelFlag;
use serde::Serialize;
use tokio::sync::{watch, Semaphore};

/// Lines of log kept in a job view.
const RECENT_LOG: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running { phase: Phase, percent: f64 },
    Done,
    Failed { message: String },
    Cancelled,
}

impl JobState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobState::Done | JobState::Failed { .. } | JobState::Cancelled)
    }

    fn allows(&self, next: &JobState) -> bool {
        match (self, next) {
            (JobState::Queued, JobState::Running { .. } | JobState::Cancelled) => true,
            (JobState::Running { phase, percent }, JobState::Running { phase: p, percent: q }) => {
                (phase.index(), *percent) <= (p.index(), *q)
            }
            (JobState::Running { .. }, s) => s.is_terminal(),
            _ => false,
        }
    }
}

pub struct JobRecord {
    pub job_id: String,
    pub state: JobState,
    pub log: Vec<String>,
    pub events: Vec<ProgressEvent>,
    pub report: Option<Report>,
    pub model: Option<ModelFile>,
}

impl JobRecord {
    /// Apply a transition if the state machine allows it.
    fn transition(&mut self, next: JobState) -> bool {
        if self.state.allows(&next) {
            self.state = next;
            true
        } else {
            false
        }
    }
}

#[derive(Serialize)]
pub struct JobView {
    pub job_id: String,
    #[serde(flatten)]
    pub state: JobState,
    pub events: usize,
    pub recent_log: Vec<String>,
    pub has_report: bool,
    pub has_model: bool,
}

pub struct Job {
    record: Mutex<JobRecord>,
    cancel: CancelFlag,
    /// Bumped whenever events or the state change.
    changed: watch::Sender<u64>,
}

impl Job {
    pub fn lock(&self) -> MutexGuard<'_, JobRecord> {
        self.record.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn bump(&self) {
        self.changed.send_modify(|v| *v += 1);
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.changed.subscribe()
    }

    pub fn view(&self) -> JobView {
        let r = self.lock();
        JobView {
            job_id: r.job_id.clone(),
            state: r.state.clone(),
            events: r.events.len(),
            recent_log: r.log[r.log.len().saturating_sub(RECENT_LOG)..].to_vec(),
            has_report: r.report.is_some(),
            has_model: r.model.is_some(),
        }
    }

    fn record_event(&self, event: &ProgressEvent) {
        {
            let mut r = self.lock();
            r.events.push(event.clone());
            if let Some(m) = &event.message {
                r.log.push(format!("[{}] {m}", event.phase.title()));
            }
            r.transition(JobState::Running {
                phase: event.phase,
                percent: event.percent,
            });
        }
        self.bump();
    }
}

pub enum CancelOutcome {
    Cancelled(JobState),
    AlreadyFinished(JobState),
}

/// Jobs plus the bounded FIFO worker pool that runs them.
pub struct JobQueue {
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    order: Mutex<Vec<String>>,
    permits: Arc<Semaphore>,
}

impl JobQueue {
    pub fn new(workers: usize) -> Self {
        JobQueue {
            jobs: Mutex::new(HashMap::new()),
            order: Mutex::new(Vec::new()),
            permits: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    pub fn list(&self) -> Vec<JobView> {
        let ids = self.order.lock().unwrap_or_else(|e| e.into_inner()).clone();
        ids.iter().filter_map(|id| self.get(id)).map(|j| j.view()).collect()
    }

    /// Queue `config`; runs start in submission order as workers free up.
    pub fn submit(&self, config: ExperimentConfig) -> String {
        let id = {
            let mut order = self.order.lock().unwrap_or_else(|e| e.into_inner());
            let id = format!("job-{}", order.len() + 1);
            order.push(id.clone());
            id
        };
        let (changed, _) = watch::channel(0);
        let job = Arc::new(Job {
            record: Mutex::new(JobRecord {
                job_id: id.clone(),
                state: JobState::Queued,
                log: Vec::new(),
                events: Vec::new(),
                report: None,
                model: None,
            }),
            cancel: CancelFlag::new(),
            changed,
        });
        self.jobs
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), job.clone());
        let permits = self.permits.clone();
        tokio::spawn(async move {
            let Ok(_permit) = permits.acquire_owned().await else {
                return;
            };
            {
                let mut r = job.lock();
                if !r.transition(JobState::Running {
                    phase: Phase::Load,
                    percent: 0.0,
                }) {
                    return;
                }
            }
            job.bump();
            let worker = job.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                let observer = |e: &ProgressEvent| worker.record_event(e);
                run_experiment(&config, &observer, &worker.cancel)
            })
            .await;
            {
                let mut r = job.lock();
                match outcome {
                    Ok(outcome) => {
                        let next = match &outcome.report.status {
                            RunStatus::Completed => JobState::Done,
                            RunStatus::Cancelled { .. } => JobState::Cancelled,
                            RunStatus::Failed { message, .. } => JobState::Failed {
                                message: message.clone(),
                            },
                        };
                        if r.transition(next) {
                            r.model = outcome.model;
                            r.report = Some(outcome.report);
                        }
                    }
                    Err(e) => {
                        r.transition(JobState::Failed {
                            message: format!("worker crashed: {e}"),
                        });
                    }
                }
                let state = r.state.clone();
                log::info!("{} finished: {state:?}", r.job_id);
            }
            job.bump();
        });
        id
    }

    pub fn cancel(&self, job: &Job) -> CancelOutcome {
        let state = {
            let mut r = job.lock();
            if r.state.is_terminal() {
                return CancelOutcome::AlreadyFinished(r.state.clone());
            }
            job.cancel.cancel();
            // A queued job never starts; a running one stops at its next check.
            if r.state == JobState::Queued {
                r.transition(JobState::Cancelled);
            }
            r.state.clone()
        };
        job.bump();
        CancelOutcome::Cancelled(state)
    }
}
