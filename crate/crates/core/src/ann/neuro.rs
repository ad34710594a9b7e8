//! Fixed-topology neuroevolution.
//!
//! Genomes are the flat parameter vectors of an [`MlpModel`]. Fitness is the
//! training pairwise accuracy (ties credit one half). Each generation keeps
//! the `elites` best genomes unchanged and fills the rest with children bred
//! by tournament selection, uniform crossover and per-gene Gaussian mutation.
//!
//! Every child draws from its own stream derived from
//! `(seed, generation, child index)`, so parallel fitness evaluation yields
//! the same population history as a sequential run.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_layers, Activation, MlpModel, Scratch};
use crate::dataset::{DataTable, PreferenceSet};
use crate::error::{Error, Result};
use crate::monitor::{Monitor, Silent};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuroConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_std: f64,
    pub elites: usize,
    pub init_scale: f64,
    pub activation: Activation,
    /// Unset: 0 when called directly; derived from the experiment seed in a pipeline.
    pub seed: Option<u64>,
}

impl Default for NeuroConfig {
    fn default() -> Self {
        NeuroConfig {
            population: 40,
            generations: 100,
            tournament: 3,
            crossover_rate: 0.5,
            mutation_rate: 0.1,
            mutation_std: 0.3,
            elites: 2,
            init_scale: 1.0,
            activation: Activation::Sigmoid,
            seed: None,
        }
    }
}

impl NeuroConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if self.generations < 1 {
            return bad("generations must be at least 1".into());
        }
        if self.tournament < 2 {
            return bad(format!("tournament size must be at least 2, got {}", self.tournament));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("crossover_rate and mutation_rate must lie in [0, 1]".into());
        }
        if !(self.mutation_std > 0.0) {
            return bad(format!("mutation_std must be positive, got {}", self.mutation_std));
        }
        if self.elites < 1 || self.elites >= self.population {
            return bad(format!(
                "elites must be in [1, population), got {} of {}",
                self.elites, self.population
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best fitness within this generation.
    pub best: f64,
    pub mean: f64,
    /// Best fitness seen in any generation so far.
    pub best_ever: f64,
}

#[derive(Clone, Debug)]
pub struct NeuroOutcome {
    pub model: MlpModel,
    pub fitness: f64,
    pub history: Vec<GenerationStats>,
    /// Final population's genomes, best first.
    pub final_population: Vec<Vec<f64>>,
}

/// Training pairwise accuracy of a parameter vector.
fn fitness(template: &MlpModel, genome: &[f64], x: &[Vec<f64>], used: &[usize], pairs: &[(usize, usize)]) -> f64 {
    let mut model = template.clone();
    model.params_mut().copy_from_slice(genome);
    let mut scratch = Scratch::new(model.layer_sizes());
    let mut scores = vec![0.0; x.len()];
    for &i in used {
        scores[i] = model.forward_into(&x[i], &mut scratch);
    }
    let credit: f64 = pairs
        .iter()
        .map(|&(a, b)| {
            let (sa, sb) = (scores[a], scores[b]);
            if sa > sb {
                1.0
            } else if sa == sb {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    credit / pairs.len() as f64
}

/// Index of the tournament winner; ties go to the earlier-ranked genome.
fn tournament(fit: &[f64], size: usize, r: &mut rng::Rng) -> usize {
    let mut best = r.random_range(0..fit.len());
    for _ in 1..size {
        let c = r.random_range(0..fit.len());
        if fit[c] > fit[best] || (fit[c] == fit[best] && c < best) {
            best = c;
        }
    }
    best
}

pub fn fit(
    x: &[Vec<f64>],
    pairs: &[(usize, usize)],
    layer_sizes: &[usize],
    config: &NeuroConfig,
    monitor: &dyn Monitor,
) -> Result<NeuroOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::NoPairs("the preference set is empty".into()));
    }
    if let Some(row) = x.iter().find(|r| r.len() != layer_sizes[0]) {
        return Err(Error::Dimension {
            expected: layer_sizes[0],
            found: row.len(),
        });
    }
    let template = MlpModel::zeros(layer_sizes, config.activation)?;
    let mut used: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();

    let seed = config.seed.unwrap_or(0);
    let init_seed = rng::derive_label(seed, "init");
    let mut population: Vec<Vec<f64>> = (0..config.population)
        .map(|i| {
            let mut r = rng::rng(rng::derive(init_seed, i as u64));
            MlpModel::random(layer_sizes, config.activation, config.init_scale, &mut r)
                .map(|m| m.params().to_vec())
        })
        .collect::<Result<_>>()?;
    let evaluate = |pop: &[Vec<f64>]| -> Vec<f64> {
        pop.par_iter().map(|g| fitness(&template, g, x, &used, pairs)).collect()
    };
    let mut fit_values = evaluate(&population);
    let normal = Normal::new(0.0, config.mutation_std).map_err(|e| Error::InvalidParam(e.to_string()))?;

    let mut best_genome = Vec::new();
    let mut best_fit = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(config.generations + 1);
    let mut record = |generation: usize, pop: &[Vec<f64>], fit: &[f64], best_genome: &mut Vec<f64>, best_fit: &mut f64| {
        let (arg, &top) = fit
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, f)| if f > acc.1 { (i, f) } else { acc });
        if top > *best_fit {
            *best_fit = top;
            *best_genome = pop[arg].clone();
        }
        history.push(GenerationStats {
            generation,
            best: top,
            mean: fit.iter().sum::<f64>() / fit.len() as f64,
            best_ever: *best_fit,
        });
    };
    record(0, &population, &fit_values, &mut best_genome, &mut best_fit);

    let breed_seed = rng::derive_label(seed, "breed");
    for generation in 1..=config.generations {
        if monitor.cancelled() {
            return Err(Error::Cancelled);
        }
        // Rank by fitness, stable so equal genomes keep their order.
        let mut rank: Vec<usize> = (0..population.len()).collect();
        rank.sort_by(|&a, &b| fit_values[b].total_cmp(&fit_values[a]));
        let ranked: Vec<Vec<f64>> = rank.iter().map(|&i| population[i].clone()).collect();
        let ranked_fit: Vec<f64> = rank.iter().map(|&i| fit_values[i]).collect();

        let gen_seed = rng::derive(breed_seed, generation as u64);
        let children: Vec<Vec<f64>> = (config.elites..config.population)
            .into_par_iter()
            .map(|k| {
                let mut r = rng::rng(rng::derive(gen_seed, k as u64));
                let p1 = &ranked[tournament(&ranked_fit, config.tournament, &mut r)];
                let p2 = &ranked[tournament(&ranked_fit, config.tournament, &mut r)];
                let mut child = if r.random::<f64>() < config.crossover_rate {
                    p1.iter()
                        .zip(p2)
                        .map(|(a, b)| if r.random::<bool>() { *a } else { *b })
                        .collect()
                } else {
                    p1.clone()
                };
                for gene in &mut child {
                    if r.random::<f64>() < config.mutation_rate {
                        *gene += normal.sample(&mut r);
                    }
                }
                child
            })
            .collect();

        let mut next: Vec<Vec<f64>> = ranked[..config.elites].to_vec();
        let mut next_fit: Vec<f64> = ranked_fit[..config.elites].to_vec();
        next_fit.extend(evaluate(&children));
        next.extend(children);
        population = next;
        fit_values = next_fit;
        record(generation, &population, &fit_values, &mut best_genome, &mut best_fit);
        monitor.progress(generation as f64 / config.generations as f64);
    }

    let mut rank: Vec<usize> = (0..population.len()).collect();
    rank.sort_by(|&a, &b| fit_values[b].total_cmp(&fit_values[a]));
    let final_population = rank.into_iter().map(|i| population[i].clone()).collect();
    Ok(NeuroOutcome {
        model: MlpModel::from_params(layer_sizes, config.activation, best_genome)?,
        fitness: best_fit,
        history,
        final_population,
    })
}

/// Evolve an MLP utility on `prefs` over `table`'s numeric objects.
pub fn neuroevolve(
    prefs: &PreferenceSet,
    table: &DataTable,
    hidden: Option<&[usize]>,
    config: &NeuroConfig,
) -> Result<NeuroOutcome> {
    let x = table.numeric_matrix()?;
    let pairs = prefs.indices(table)?;
    fit(&x, &pairs, &default_layers(table.schema().len(), hidden), config, &Silent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.61).sin(), (i as f64 * 0.37).cos()]).collect();
        let pairs = (0..30)
            .map(|i| {
                let (a, b) = (2 * i, 2 * i + 1);
                if x[a][0] - x[a][1] > x[b][0] - x[b][1] {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        (x, pairs)
    }

    #[test]
    fn best_ever_is_monotone_and_generation_best_too() {
        let (x, pairs) = data();
        let config = NeuroConfig {
            population: 12,
            generations: 15,
            ..NeuroConfig::default()
        };
        let out = fit(&x, &pairs, &[2, 3, 1], &config, &Silent).unwrap();
        assert_eq!(out.history.len(), 16);
        for w in out.history.windows(2) {
            assert!(w[1].best_ever >= w[0].best_ever);
            assert!(w[1].best >= w[0].best, "elites keep the generation maximum");
        }
        assert_eq!(out.fitness, out.history.last().unwrap().best_ever);
    }

    #[test]
    fn degenerate_ga_returns_fitter_initial_genome() {
        let (x, pairs) = data();
        let config = NeuroConfig {
            population: 2,
            generations: 1,
            tournament: 2,
            elites: 1,
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            seed: Some(4),
            ..NeuroConfig::default()
        };
        let layers = [2, 3, 1];
        let out = fit(&x, &pairs, &layers, &config, &Silent).unwrap();
        let init_seed = rng::derive_label(4, "init");
        let template = MlpModel::zeros(&layers, Activation::Sigmoid).unwrap();
        let initial: Vec<(Vec<f64>, f64)> = (0..2)
            .map(|i| {
                let mut r = rng::rng(rng::derive(init_seed, i));
                let g = MlpModel::random(&layers, Activation::Sigmoid, 1.0, &mut r).unwrap().params().to_vec();
                let f = fitness(&template, &g, &x, &(0..60).collect::<Vec<_>>(), &pairs);
                (g, f)
            })
            .collect();
        let fitter = if initial[1].1 > initial[0].1 { &initial[1] } else { &initial[0] };
        assert_eq!(out.model.params(), fitter.0.as_slice());
        assert_eq!(out.fitness, fitter.1);
    }

    #[test]
    fn config_invariants() {
        let (x, pairs) = data();
        for bad in [
            NeuroConfig { population: 1, elites: 0, ..NeuroConfig::default() },
            NeuroConfig { elites: 40, ..NeuroConfig::default() },
            NeuroConfig { tournament: 1, ..NeuroConfig::default() },
            NeuroConfig { mutation_rate: 1.5, ..NeuroConfig::default() },
            NeuroConfig { mutation_std: 0.0, ..NeuroConfig::default() },
        ] {
            assert!(matches!(fit(&x, &pairs, &[2, 1], &bad, &Silent), Err(Error::InvalidParam(_))));
        }
    }
}
