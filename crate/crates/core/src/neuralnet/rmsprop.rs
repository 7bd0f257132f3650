use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::backprop::Gradients;
use super::model::MlpModel;
use crate::{Error, Result};

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

impl RmsProp {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::arg(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::arg(format!("RMSProp decay {} outside [0, 1)", self.decay)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::arg(format!("epsilon {} must be > 0", self.epsilon)));
        }
        Ok(())
    }
}

/// One RMSProp update on a flat parameter block:
///
/// ```text
/// state <- decay * state + (1 - decay) * grad^2
/// param <- param - lr * grad / sqrt(state + eps)
/// ```
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut [f64], hp: RmsProp) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::dim("rmsprop gradients", params.len(), grads.len()));
    }
    if state.len() != params.len() {
        return Err(Error::dim("rmsprop state", params.len(), state.len()));
    }
    let keep = 1.0 - hp.decay;
    for ((p, g), s) in params.iter_mut().zip(grads).zip(state.iter_mut()) {
        *s = hp.decay * *s + keep * g * g;
        *p -= hp.learning_rate * g / libm::sqrt(*s + hp.epsilon);
    }
    Ok(())
}

/// Running mean of squared gradients for every parameter of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RmsPropState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers()
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b))
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients, hp: RmsProp) -> Result<()> {
        if self.layers.len() != model.layers().len() || grads.layers.len() != model.layers().len() {
            return Err(Error::dim("rmsprop layers", model.layers().len(), grads.layers.len()));
        }
        let n = model.layers().len();
        let output_bias = model.has_output_bias();
        for (i, ((layer, g), (sw, sb))) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.layers)
            .enumerate()
        {
            rmsprop_step(&mut layer.weights, &g.weights, sw, hp)?;
            if i + 1 < n || output_bias {
                rmsprop_step(&mut layer.biases, &g.biases, sb, hp)?;
            }
        }
        Ok(())
    }
}
