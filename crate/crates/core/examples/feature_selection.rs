//! Rank single features, then grow a subset greedily, on data where only
//! the first three features matter.

use preflearn::evaluation::ValidationSpec;
use preflearn::featsel::{n_best, sfs, Evaluator};
use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::preprocess::PreprocessPlan;
use preflearn::ranksvm::SvmParams;
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 400,
        n_features: 6,
        function: SynthFunction::Linear {
            weights: Some(vec![1.0, 0.8, 0.6, 0.0, 0.0, 0.0]),
        },
        noise: 0.0,
        seed: 1,
    })?;
    let dataset = data.dataset();
    let evaluator = Evaluator {
        learner: LearnerSpec::RankSvm(SvmParams::default()),
        validation: ValidationSpec::k_fold(3, 4),
        plan: PreprocessPlan::default(),
        seed: 4,
    };

    let ranked = n_best(&dataset, 6, &evaluator, &Silent)?;
    println!("single-feature ranking:");
    for s in &ranked.trace {
        println!("  {}  {:<4} {:.4}", s.round, s.feature, s.score);
    }

    let greedy = sfs(&dataset, 6, 0.0, &evaluator, &Silent)?;
    println!("forward selection:");
    for s in &greedy.trace {
        println!("  round {}  +{:<4} {:.4}", s.round, s.feature, s.score);
    }
    println!("selected {:?} ({})", greedy.selected, greedy.stop_reason);
    Ok(())
}
