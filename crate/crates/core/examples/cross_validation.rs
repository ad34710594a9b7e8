//! Compare the three learners by 3-fold cross-validation, with a plan that
//! is refitted inside every fold.

use preflearn::ann::{Activation, BackpropConfig, NeuroConfig};
use preflearn::evaluation::{cross_validate, Metric, ValidationMode, ValidationSpec};
use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::preprocess::{PreprocessPlan, PreprocessStep};
use preflearn::ranksvm::{KernelSpec, SvmParams};
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let dataset = gen_dataset(&SynthSpec {
        n_pairs: 600,
        n_features: 5,
        function: SynthFunction::RandomMlp { hidden: 5, seed: None },
        noise: 0.05,
        seed: 11,
    })?
    .dataset();
    let plan = PreprocessPlan::new((0..5).map(|i| PreprocessStep::ZScore(format!("x{i}"))).collect());
    let spec = ValidationSpec {
        mode: ValidationMode::KFold { k: 3, seed: None },
        metric: Metric::PairwiseAccuracy,
    };
    let learners = [
        LearnerSpec::RankSvm(SvmParams {
            kernel: KernelSpec::Rbf { gamma: Some(1.0) },
            ..SvmParams::default()
        }),
        LearnerSpec::Backprop {
            hidden: Some(vec![10]),
            config: BackpropConfig { activation: Activation::Tanh, ..BackpropConfig::default() },
        },
        LearnerSpec::Neuro {
            hidden: Some(vec![5]),
            config: NeuroConfig { generations: 50, activation: Activation::Tanh, ..NeuroConfig::default() },
        },
    ];
    for learner in &learners {
        let r = cross_validate(learner, &dataset, &plan, &spec, 7, &Silent)?;
        let folds: Vec<String> = r.values.iter().map(|v| format!("{v:.3}")).collect();
        println!("{:<9} mean {:.4} ± {:.4}  folds [{}]", learner.name(), r.mean, r.std, folds.join(", "));
    }
    Ok(())
}
