use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::loss::mae_subgradient;
use super::model::{ForwardCache, MlpModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradients with the same shapes as the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers()
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(&mut l.biases).for_each(|g| *g *= factor);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }
}

/// Per-call scratch for [`MlpModel::backward_accumulate`].
#[derive(Debug, Default)]
pub(crate) struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl MlpModel {
    /// Gradient of `|prediction - target|` for the pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, target: f64) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_accumulate(cache, target, 1.0, &mut grads, &mut BackwardScratch::default())?;
        Ok(grads)
    }

    /// Adds `scale * d|pred - target|/dtheta` into `grads`.
    pub(crate) fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        target: f64,
        scale: f64,
        grads: &mut Gradients,
        scratch: &mut BackwardScratch,
    ) -> Result<()> {
        self.check_cache(cache)?;
        if grads.layers.len() != self.layers().len() {
            return Err(Error::dim("gradient layers", self.layers().len(), grads.layers.len()));
        }
        let d_out = mae_subgradient(cache.output, target) * scale;
        if d_out == 0.0 {
            return Ok(());
        }
        let n = self.layers().len();
        let delta = &mut scratch.delta;
        let next = &mut scratch.next;
        delta.clear();
        delta.push(d_out);

        for i in (0..n).rev() {
            let layer = &self.layers()[i];
            let g = &mut grads.layers[i];
            let input: &[f64] = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            let bias_trainable = i + 1 < n || self.has_output_bias();
            if bias_trainable {
                for (gb, d) in g.biases.iter_mut().zip(delta.iter()) {
                    *gb += d;
                }
            }
            let need_input_grad = i > 0;
            next.clear();
            next.resize(layer.fan_in, 0.0);
            let rows = layer
                .weights
                .chunks_exact(layer.fan_out)
                .zip(g.weights.chunks_exact_mut(layer.fan_out));
            for (k, ((w_row, g_row), a)) in rows.zip(input).enumerate() {
                if *a != 0.0 {
                    for (gw, d) in g_row.iter_mut().zip(delta.iter()) {
                        *gw += a * d;
                    }
                }
                if need_input_grad {
                    next[k] = w_row.iter().zip(delta.iter()).map(|(w, d)| w * d).sum();
                }
            }
            if need_input_grad {
                // Back through dropout and ReLU of hidden layer i - 1.
                let pre = &cache.pre[i - 1];
                match &cache.masks[i - 1] {
                    Some(mask) => {
                        for ((d, z), m) in next.iter_mut().zip(pre).zip(mask) {
                            if *z <= 0.0 {
                                *d = 0.0;
                            } else {
                                *d *= m;
                            }
                        }
                    }
                    None => {
                        for (d, z) in next.iter_mut().zip(pre) {
                            if *z <= 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                }
                core::mem::swap(delta, next);
            }
        }
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let n = self.layers().len();
        let ok = cache.pre.len() == n
            && cache.post.len() == n - 1
            && cache.masks.len() == n - 1
            && cache.input.len() == self.input_dim()
            && self
                .layers()
                .iter()
                .zip(&cache.pre)
                .all(|(l, z)| z.len() == l.fan_out);
        if ok {
            Ok(())
        } else {
            Err(Error::CacheMismatch(format!(
                "cache with {} layers for a model with {n}",
                cache.pre.len()
            )))
        }
    }
}
