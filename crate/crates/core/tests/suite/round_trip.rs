use preflearn::ann::{Activation, BackpropConfig, NeuroConfig};
use preflearn::dataset::{parse_objects, DataTable, Feature, FeatureSchema, Row, Value};
use preflearn::experiment::{ModelFile, ModelMetadata};
use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::preprocess::{FittedPlan, PreprocessPlan, PreprocessStep};
use preflearn::ranksvm::{KernelSpec, SvmParams};
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};
use proptest::prelude::*;

fn learners() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::RankSvm(SvmParams {
            kernel: KernelSpec::Rbf { gamma: Some(0.7) },
            ..SvmParams::default()
        }),
        LearnerSpec::Backprop {
            hidden: Some(vec![6]),
            config: BackpropConfig {
                epochs: 5,
                activation: Activation::Tanh,
                ..BackpropConfig::default()
            },
        },
        LearnerSpec::Neuro {
            hidden: Some(vec![3]),
            config: NeuroConfig {
                generations: 3,
                population: 8,
                ..NeuroConfig::default()
            },
        },
    ]
}

/// A saved model scores 100 random tables identically after reloading.
pub fn model_scores() -> Result<(), String> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 60,
        n_features: 4,
        function: SynthFunction::Quadratic { matrix: None, weights: None },
        noise: 0.0,
        seed: 2,
    })
    .map_err(|e| e.to_string())?;
    let plan = PreprocessPlan::new(vec![PreprocessStep::ZScore("x1".into()), PreprocessStep::MinMax("x3".into())]);
    let (fitted, table) = FittedPlan::fit(&data.table, &plan).map_err(|e| e.to_string())?;
    let x = table.numeric_matrix().map_err(|e| e.to_string())?;
    let pairs = data.prefs.indices(&table).map_err(|e| e.to_string())?;
    let names: Vec<String> = table.schema().names().map(String::from).collect();

    let files: Vec<ModelFile> = learners()
        .iter()
        .map(|spec| {
            let trained = spec.fit(&x, &pairs, &Silent).unwrap();
            let metadata = ModelMetadata {
                learner: spec.name().into(),
                features: names.clone(),
                config_hash: None,
                seed: Some(1),
                created: "2026-01-01T00:00:00Z".into(),
                tool_version: "test".into(),
                training: Some(trained.summary),
            };
            ModelFile::new(fitted.clone(), trained.model, metadata)
        })
        .collect();
    let reloaded: Vec<ModelFile> = files.iter().map(|f| ModelFile::from_json(f.to_json().as_bytes()).unwrap()).collect();

    let rows = proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..8);
    super::run(100, rows, |rows| {
        let ids = (0..rows.len()).map(|i| format!("q{i}")).collect();
        let t = DataTable::from_numeric(&names, ids, &rows).unwrap();
        for (a, b) in files.iter().zip(&reloaded) {
            let sa = a.score_table(&t).unwrap();
            let sb = b.score_table(&t).unwrap();
            prop_assert!(sa.iter().zip(&sb).all(|(p, q)| p.to_bits() == q.to_bits()), "{:?} vs {:?}", sa, sb);
        }
        Ok(())
    })
}

fn tables() -> impl Strategy<Value = DataTable> {
    let cats = ["red", "green", "blue"];
    (1usize..4, 0usize..3, 1usize..12).prop_flat_map(move |(nn, nc, rows)| {
        let num = proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, nn), rows);
        let cat = proptest::collection::vec(proptest::collection::vec(0usize..3, nc), rows);
        (num, cat).prop_map(move |(num, cat)| {
            let mut features: Vec<Feature> = (0..nn).map(|i| Feature::numeric(format!("n{i}"))).collect();
            features.extend((0..nc).map(|i| Feature::nominal(format!("c{i}"), cats)));
            let rows = num
                .iter()
                .zip(&cat)
                .enumerate()
                .map(|(i, (n, c))| Row {
                    id: format!("id{i}"),
                    values: n.iter().map(|&v| Value::Num(v)).chain(c.iter().map(|&v| Value::Cat(v))).collect(),
                })
                .collect();
            DataTable::new(FeatureSchema::new(features).unwrap(), rows).unwrap()
        })
    })
}

pub fn delimited_table() -> Result<(), String> {
    super::run(100, (tables(), prop_oneof![Just(','), Just('\t'), Just(';')]), |(t, sep)| {
        let text = t.to_delimited(sep);
        let back = parse_objects(text.as_bytes(), &t.round_trip_options(sep)).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (a, b) in back.rows().iter().zip(t.rows()) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(&a.values.len(), &b.values.len());
            for (x, y) in a.values.iter().zip(&b.values) {
                match (x, y) {
                    (Value::Num(p), Value::Num(q)) => prop_assert_eq!(p.to_bits(), q.to_bits()),
                    _ => {
                        // Categories are re-indexed by first appearance; compare labels.
                        prop_assert!(matches!((x, y), (Value::Cat(_), Value::Cat(_))));
                    }
                }
            }
        }
        prop_assert_eq!(back.to_delimited(sep), text);
        Ok(())
    })
}
