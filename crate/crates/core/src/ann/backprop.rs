use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{default_layers, logistic_loss, logistic_loss_slope, Activation, MlpModel, Scratch};
use crate::dataset::{DataTable, PreferenceSet};
use crate::error::{Error, Result};
use crate::monitor::{Monitor, Silent};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackpropConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Steepness σ of the pairwise logistic loss.
    pub sigma: f64,
    /// Initial weights are uniform in `±init_scale/√fan_in`.
    pub init_scale: f64,
    pub activation: Activation,
    /// Unset: 0 when called directly; derived from the experiment seed in a pipeline.
    pub seed: Option<u64>,
}

impl Default for BackpropConfig {
    fn default() -> Self {
        BackpropConfig {
            learning_rate: 0.1,
            epochs: 100,
            batch_size: 10,
            sigma: 1.0,
            init_scale: 1.0,
            activation: Activation::Sigmoid,
            seed: None,
        }
    }
}

impl BackpropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParam(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParam("epochs and batch_size must be at least 1".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParam(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::InvalidParam("init_scale must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BackpropOutcome {
    pub model: MlpModel,
    /// Mean pair loss over the training set after the last epoch.
    pub final_loss: f64,
    /// Mean pair loss seen during each epoch (before each batch update).
    pub epoch_losses: Vec<f64>,
}

/// Mean logistic loss of `model` over `pairs`.
pub fn mean_pair_loss(model: &MlpModel, x: &[Vec<f64>], pairs: &[(usize, usize)], sigma: f64) -> f64 {
    let scores: Vec<f64> = x.iter().map(|r| model.forward_unchecked(r)).collect();
    pairs
        .iter()
        .map(|&(a, b)| logistic_loss(scores[a] - scores[b], sigma))
        .sum::<f64>()
        / pairs.len() as f64
}

/// Gradient of the mean pair loss with respect to the flat parameters.
pub fn loss_gradient(model: &MlpModel, x: &[Vec<f64>], pairs: &[(usize, usize)], sigma: f64) -> Vec<f64> {
    let mut grad = vec![0.0; model.params().len()];
    let mut sa = Scratch::new(model.layer_sizes());
    let mut sb = Scratch::new(model.layer_sizes());
    let inv = 1.0 / pairs.len() as f64;
    for &(a, b) in pairs {
        let d = model.forward_into(&x[a], &mut sa) - model.forward_into(&x[b], &mut sb);
        let slope = logistic_loss_slope(d, sigma) * inv;
        model.accumulate_gradient(slope, &mut sa, &mut grad);
        model.accumulate_gradient(-slope, &mut sb, &mut grad);
    }
    grad
}

/// Mini-batch gradient descent on the pairwise logistic loss.
///
/// `layer_sizes` must start with the feature count and end with 1.
pub fn fit(
    x: &[Vec<f64>],
    pairs: &[(usize, usize)],
    layer_sizes: &[usize],
    config: &BackpropConfig,
    monitor: &dyn Monitor,
) -> Result<BackpropOutcome> {
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
    let seed = config.seed.unwrap_or(0);
    let mut init_rng = rng::rng(rng::derive_label(seed, "init"));
    let mut model = MlpModel::random(layer_sizes, config.activation, config.init_scale, &mut init_rng)?;
    let mut order_rng = rng::rng(rng::derive_label(seed, "order"));

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut grad = vec![0.0; model.params().len()];
    let mut sa = Scratch::new(layer_sizes);
    let mut sb = Scratch::new(layer_sizes);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if monitor.cancelled() {
            return Err(Error::Cancelled);
        }
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv = 1.0 / batch.len() as f64;
            for &p in batch {
                let (a, b) = pairs[p];
                let d = model.forward_into(&x[a], &mut sa) - model.forward_into(&x[b], &mut sb);
                loss_sum += logistic_loss(d, config.sigma);
                let slope = logistic_loss_slope(d, config.sigma) * inv;
                model.accumulate_gradient(slope, &mut sa, &mut grad);
                model.accumulate_gradient(-slope, &mut sb, &mut grad);
            }
            for (w, g) in model.params_mut().iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
        let mean = loss_sum / pairs.len() as f64;
        if !mean.is_finite() || model.params().iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
        monitor.progress((epoch + 1) as f64 / config.epochs as f64);
    }
    let final_loss = mean_pair_loss(&model, x, pairs, config.sigma);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: config.epochs });
    }
    Ok(BackpropOutcome {
        model,
        final_loss,
        epoch_losses,
    })
}

/// Train an MLP utility on `prefs` over `table`'s numeric objects.
/// `hidden` lists hidden-layer widths (`None`: one layer of 2× input width).
pub fn backprop_train(
    prefs: &PreferenceSet,
    table: &DataTable,
    hidden: Option<&[usize]>,
    config: &BackpropConfig,
) -> Result<BackpropOutcome> {
    let x = table.numeric_matrix()?;
    let pairs = prefs.indices(table)?;
    fit(&x, &pairs, &default_layers(table.schema().len(), hidden), config, &Silent)
}
