use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::ranksvm::SvmParams;
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};
use preflearn::ann::{BackpropConfig, NeuroConfig};
use proptest::prelude::*;

pub fn all_seeded() -> Result<(), String> {
    super::run(8, any::<u64>(), |seed| {
        let spec = SynthSpec {
            n_pairs: 40,
            n_features: 3,
            function: SynthFunction::RandomMlp { hidden: 4, seed: None },
            noise: 0.1,
            seed,
        };
        let data = gen_dataset(&spec).unwrap();
        prop_assert_eq!(&data, &gen_dataset(&spec).unwrap());
        let x = data.table.numeric_matrix().unwrap();
        let pairs = data.prefs.indices(&data.table).unwrap();
        let learners = [
            LearnerSpec::RankSvm(SvmParams::default()),
            LearnerSpec::Backprop {
                hidden: None,
                config: BackpropConfig {
                    epochs: 3,
                    seed: Some(seed),
                    ..BackpropConfig::default()
                },
            },
            LearnerSpec::Neuro {
                hidden: None,
                config: NeuroConfig {
                    generations: 3,
                    population: 6,
                    seed: Some(seed),
                    ..NeuroConfig::default()
                },
            },
        ];
        for spec in &learners {
            let a = spec.fit(&x, &pairs, &Silent).unwrap().model;
            let b = spec.fit(&x, &pairs, &Silent).unwrap().model;
            prop_assert_eq!(a, b, "{} is not reproducible", spec.name());
        }
        Ok(())
    })
}
