//! Run a whole experiment from a JSON config with live progress, as the
//! batch tool and the service do.
//!
//! ```text
//! cargo run --release --example run_experiment -- configs/train_linear.json
//! ```

use std::path::Path;

use preflearn::experiment::{run_experiment, ExperimentConfig, ProgressEvent};
use preflearn::monitor::CancelFlag;

const INLINE: &str = r#"{
  "dataset": {"type": "synthetic", "n_pairs": 300, "n_features": 4, "seed": 2},
  "preprocess": [{"z_score": "x0"}],
  "selection": {"strategy": {"type": "n_best", "n": 3}},
  "learner": {"type": "rank_svm", "c": 1.0},
  "validation": {"mode": {"type": "k_fold", "k": 3}},
  "seed": 42
}"#;

fn main() -> preflearn::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::from_file(Path::new(&p))?,
        None => ExperimentConfig::from_json(INLINE.as_bytes())?,
    };
    println!("fold split seed {}", config.seeds().split);

    let observer = |e: &ProgressEvent| {
        if let Some(m) = &e.message {
            println!("[{:>5.1}%] {:<18} {m}", e.percent, e.phase.title());
        }
    };
    let outcome = run_experiment(&config, &observer, &CancelFlag::new());
    print!("{}", outcome.report.to_text());
    Ok(())
}
