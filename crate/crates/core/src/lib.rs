//! Preference learning from total and partial orders.
//!
//! The crate trains utility models `f: features → ℝ` whose comparisons
//! reproduce observed preferences. Orders (ranked lists or ratings) are
//! flattened into pairwise preferences and learned by a kernel
//! [Ranking SVM](ranksvm), a [multilayer perceptron](ann) trained by pairwise
//! backpropagation, or the same network evolved by a genetic algorithm.
//!
//! Around the learners sit the usual phases of an experiment: dataset
//! [parsing](dataset), [preprocessing](preprocess), wrapper
//! [feature selection](featsel), [validation](evaluation) and
//! [reporting](experiment). Runnable walkthroughs of each live in the crate's
//! `examples/` directory.

pub mod ann;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod featsel;
mod json;
pub mod learner;
pub mod monitor;
pub mod preprocess;
pub mod ranksvm;
pub mod rng;
pub mod sushi;
pub mod synthetic;

pub use error::{Error, Result};
