//! Experiment pipeline: configuration, the five-phase runner, reports and
//! model files.

mod config;
mod model_file;
mod report;
mod run;

pub use config::{DataSource, ExperimentConfig, OutputPaths, ResolvedSeeds};
pub use model_file::{load_model, save_model, ModelFile, ModelMetadata, FORMAT_VERSION};
pub use report::{Phase, PhaseSummary, Report, RunStatus, TIMING_KEYS};
pub use run::{run_experiment, select_features, write_outputs, ExperimentOutcome, NoObserver, Observer, ProgressEvent};
