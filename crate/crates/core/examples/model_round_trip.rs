//! Train, save a self-contained model file, load it back and score new
//! objects with the stored preprocessing.

use preflearn::ann::BackpropConfig;
use preflearn::experiment::{load_model, save_model, ModelFile, ModelMetadata};
use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::preprocess::{FittedPlan, PreprocessPlan, PreprocessStep};
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 300,
        n_features: 3,
        function: SynthFunction::Linear { weights: Some(vec![2.0, -1.0, 0.5]) },
        noise: 0.0,
        seed: 6,
    })?;
    let plan = PreprocessPlan::new(vec![PreprocessStep::MinMax("x0".into())]);
    let (fitted, table) = FittedPlan::fit(&data.table, &plan)?;
    let learner = LearnerSpec::Backprop { hidden: Some(vec![4]), config: BackpropConfig::default() };
    let trained = learner.fit(&table.numeric_matrix()?, &data.prefs.indices(&table)?, &Silent)?;

    let metadata = ModelMetadata {
        learner: learner.name().into(),
        features: table.schema().names().map(String::from).collect(),
        config_hash: None,
        seed: learner.seed(),
        created: "2026-01-01T00:00:00Z".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        training: Some(trained.summary),
    };
    let file = ModelFile::new(fitted, trained.model, metadata);
    let path = std::env::temp_dir().join("preflearn_example_model.json");
    save_model(&file, &path)?;
    let loaded = load_model(&path)?;

    let before = file.score_table(&data.table)?;
    let after = loaded.score_table(&data.table)?;
    let identical = before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("wrote {}; scores identical after reload: {identical}", path.display());
    println!("first scores {:?}", &after[..3]);
    Ok(())
}
