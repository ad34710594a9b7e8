//! Fit a preprocessing plan on training objects and replay the same
//! transformation on unseen ones.

use preflearn::dataset::{parse_objects, ParserOptions};
use preflearn::preprocess::{FittedPlan, PreprocessPlan, PreprocessStep};

const TRAIN: &str = "id,price,area,kind\n1,120,40,flat\n2,300,95,house\n3,180,60,flat\n4,250,80,loft\n";
const NEW: &str = "id,price,area,kind\n5,400,70,house\n";

fn main() -> preflearn::Result<()> {
    let opts = ParserOptions {
        has_header: true,
        nominal_columns: vec!["kind".into()],
        ..ParserOptions::default()
    };
    let train = parse_objects(TRAIN.as_bytes(), &opts)?;
    let plan = PreprocessPlan::new(vec![
        PreprocessStep::MinMax("price".into()),
        PreprocessStep::ZScore("area".into()),
        PreprocessStep::NominalToBinary("kind".into()),
    ]);
    let (fitted, out) = FittedPlan::fit(&train, &plan)?;
    println!("fitted plan:\n{}", serde_json::to_string_pretty(&fitted).unwrap());
    print!("training table:\n{}", out.to_delimited('\t'));

    // Statistics come from the training table, so the new price exceeds 1.
    let fresh = fitted.replay(&parse_objects(NEW.as_bytes(), &opts)?)?;
    print!("replayed:\n{}", fresh.to_delimited('\t'));
    Ok(())
}
