//! Evolve network weights with a genetic algorithm; fitness is training
//! pairwise accuracy.

use preflearn::ann::{neuroevolve, Activation, NeuroConfig};
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 500,
        n_features: 4,
        function: SynthFunction::RandomMlp { hidden: 5, seed: None },
        noise: 0.0,
        seed: 8,
    })?;
    let config = NeuroConfig {
        population: 30,
        generations: 60,
        activation: Activation::Tanh,
        seed: Some(2),
        ..NeuroConfig::default()
    };
    let out = neuroevolve(&data.prefs, &data.table, Some(&[5]), &config)?;
    for g in out.history.iter().step_by(10) {
        println!("generation {:>3}  best {:.4}  mean {:.4}", g.generation, g.best, g.mean);
    }
    println!("best fitness {:.4}", out.fitness);
    Ok(())
}
