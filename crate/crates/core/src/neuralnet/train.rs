use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backprop::{BackwardScratch, Gradients};
use super::model::{ForwardCache, MlpModel};
use super::rmsprop::{RmsProp, RmsPropState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub optimizer: RmsProp,
    /// Seeds both the per-epoch shuffle and the dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            dropout_rate: 0.2,
            optimizer: RmsProp::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::arg("batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::arg(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Mean absolute error of the training-mode predictions in each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch RMSProp on mean absolute error.
///
/// Every epoch reshuffles the examples; the batch gradient is the mean over
/// the batch and the final short batch is kept. Runs are bit-for-bit
/// reproducible for a given seed.
pub fn train<X: AsRef<[f64]>>(
    model: &mut MlpModel,
    examples: &[(X, f64)],
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::arg("cannot train on an empty example set"));
    }
    let dim = model.input_dim();
    if let Some((x, _)) = examples.iter().find(|(x, _)| x.as_ref().len() != dim) {
        return Err(Error::dim("training example", dim, x.as_ref().len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = RmsPropState::new(model);
    let mut grads = Gradients::zeros_like(model);
    let mut cache = ForwardCache::default();
    let mut scratch = BackwardScratch::default();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut abs_error = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let (x, target) = &examples[idx];
                let pred = model.forward_into(
                    x.as_ref(),
                    Some((config.dropout_rate, &mut rng as &mut dyn RngCore)),
                    &mut cache,
                )?;
                abs_error += (pred - target).abs();
                model.backward_accumulate(&cache, *target, scale, &mut grads, &mut scratch)?;
            }
            state.step(model, &grads, config.optimizer)?;
        }
        let loss = abs_error / examples.len() as f64;
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Validation(format!("training diverged in epoch {epoch}")));
        }
        epoch_losses.push(loss);
    }
    Ok(TrainHistory { epoch_losses })
}
