//! Pairwise logistic-loss training of a small network by gradient descent.

use preflearn::ann::{backprop_train, Activation, BackpropConfig};
use preflearn::evaluation::pairwise_accuracy;
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 1000,
        n_features: 6,
        function: SynthFunction::Quadratic { matrix: None, weights: None },
        noise: 0.0,
        seed: 5,
    })?;
    let config = BackpropConfig {
        epochs: 60,
        activation: Activation::Tanh,
        seed: Some(1),
        ..BackpropConfig::default()
    };
    let out = backprop_train(&data.prefs, &data.table, Some(&[12]), &config)?;
    for (epoch, loss) in out.epoch_losses.iter().enumerate().step_by(10) {
        println!("epoch {epoch:>3}  loss {loss:.4}");
    }
    let acc = pairwise_accuracy(|x| out.model.forward(x).unwrap_or(f64::NAN), &data.prefs, &data.table)?;
    println!("final loss {:.4}, training accuracy {acc:.4}", out.final_loss);
    Ok(())
}
