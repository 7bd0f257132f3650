use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dropout::dropout_in_place;
use crate::{Error, Result};

/// Output widths of the four hidden layers.
pub const HIDDEN_SIZES: [usize; 4] = [256, 128, 64, 32];

/// Fully connected layer computing `W^T x + b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_in x fan_out`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    /// He-uniform: `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    fn he_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = libm::sqrt(6.0 / fan_in as f64);
        let weights = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            fan_in,
            fan_out,
            weights,
            biases: vec![0.0; fan_out],
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.fan_out + j]
    }

    fn check(&self) -> Result<()> {
        if self.fan_in == 0 || self.fan_out == 0 {
            return Err(Error::arg("layer sizes must be positive"));
        }
        if self.weights.len() != self.fan_in * self.fan_out {
            return Err(Error::dim("layer weights", self.fan_in * self.fan_out, self.weights.len()));
        }
        if self.biases.len() != self.fan_out {
            return Err(Error::dim("layer biases", self.fan_out, self.biases.len()));
        }
        Ok(())
    }

    /// `out = W^T x + b`. Zero inputs are skipped, which pays off after ReLU.
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.biases);
        for (xi, row) in x.iter().zip(self.weights.chunks_exact(self.fan_out)) {
            if *xi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

/// Stack of dense layers: ReLU (+ dropout while training) on every hidden
/// layer, identity on the single output unit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    /// When false the output bias stays at zero and is never updated.
    output_bias: bool,
}

/// Activations recorded by a forward pass, reused by [`MlpModel::backward`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardCache {
    pub(crate) input: Vec<f64>,
    /// Pre-activation of each layer.
    pub(crate) pre: Vec<Vec<f64>>,
    /// Post-ReLU, post-dropout output of each hidden layer.
    pub(crate) post: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit (0 or `1 / (1 - rate)`), if dropout ran.
    pub(crate) masks: Vec<Option<Vec<f64>>>,
    pub(crate) output: f64,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn hidden_activations(&self) -> &[Vec<f64>] {
        &self.post
    }

    pub fn masks(&self) -> &[Option<Vec<f64>>] {
        &self.masks
    }
}

/// Network with the default hidden sizes and He-uniform weights.
pub fn init_model(input_dim: usize, seed: u64) -> Result<MlpModel> {
    MlpModel::new(input_dim, &HIDDEN_SIZES, true, seed)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

impl MlpModel {
    pub fn new(input_dim: usize, hidden: &[usize], output_bias: bool, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::arg("input dimension must be positive"));
        }
        if hidden.contains(&0) {
            return Err(Error::arg("hidden layer sizes must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &fan_out in hidden.iter().chain(&[1]) {
            layers.push(DenseLayer::he_uniform(fan_in, fan_out, &mut rng));
            fan_in = fan_out;
        }
        Ok(Self { layers, output_bias })
    }

    /// All-zero parameters.
    pub fn zeros(input_dim: usize, hidden: &[usize]) -> Result<Self> {
        let mut layers = Vec::new();
        let mut fan_in = input_dim;
        for &fan_out in hidden.iter().chain(&[1]) {
            layers.push(DenseLayer::zeros(fan_in, fan_out));
            fan_in = fan_out;
        }
        Self::from_layers(layers, true)
    }

    pub fn from_layers(layers: Vec<DenseLayer>, output_bias: bool) -> Result<Self> {
        let model = Self { layers, output_bias };
        model.validate()?;
        Ok(model)
    }

    /// Checks shapes, chaining and that every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let last = self
            .layers
            .last()
            .ok_or_else(|| Error::arg("model needs at least one layer"))?;
        if last.fan_out != 1 {
            return Err(Error::dim("output layer", 1, last.fan_out));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.check()?;
            if i > 0 && self.layers[i - 1].fan_out != layer.fan_in {
                return Err(Error::dim(
                    format!("fan-in of layer {i}"),
                    self.layers[i - 1].fan_out,
                    layer.fan_in,
                ));
            }
        }
        if !self.output_bias && last.biases[0] != 0.0 {
            return Err(Error::Validation("output bias disabled but nonzero".into()));
        }
        if !self.is_finite() {
            return Err(Error::Validation("model has non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn has_output_bias(&self) -> bool {
        self.output_bias
    }

    /// `(fan_in, fan_out)` of every layer.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.fan_in, l.fan_out)).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Inference pass, no dropout.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, ForwardCache)> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, None, &mut cache)?;
        Ok((cache.output, cache))
    }

    /// Training pass with inverted dropout on every hidden layer.
    pub fn forward_train(
        &self,
        input: &[f64],
        dropout_rate: f64,
        rng: &mut dyn RngCore,
    ) -> Result<(f64, ForwardCache)> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, Some((dropout_rate, rng)), &mut cache)?;
        Ok((cache.output, cache))
    }

    /// Forward pass writing into a reusable cache.
    pub fn forward_into(
        &self,
        input: &[f64],
        mut dropout: Option<(f64, &mut dyn RngCore)>,
        cache: &mut ForwardCache,
    ) -> Result<f64> {
        if input.len() != self.input_dim() {
            return Err(Error::dim("model input", self.input_dim(), input.len()));
        }
        if let Some((rate, _)) = dropout {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::arg(format!("dropout rate {rate} outside [0, 1)")));
            }
        }
        let n = self.layers.len();
        cache.pre.resize_with(n, Vec::new);
        cache.post.resize_with(n - 1, Vec::new);
        cache.masks.resize_with(n - 1, || None);
        cache.input.clear();
        cache.input.extend_from_slice(input);

        for (i, layer) in self.layers.iter().enumerate() {
            let prev: &[f64] = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            let mut z = core::mem::take(&mut cache.pre[i]);
            z.resize(layer.fan_out, 0.0);
            layer.affine(prev, &mut z);
            if i + 1 < n {
                let mut h = core::mem::take(&mut cache.post[i]);
                h.clear();
                h.extend(z.iter().map(|&v| v.max(0.0)));
                match dropout.as_mut() {
                    Some((rate, rng)) if *rate > 0.0 => {
                        let mut mask = cache.masks[i].take().unwrap_or_default();
                        dropout_in_place(&mut h, *rate, &mut **rng, &mut mask);
                        cache.masks[i] = Some(mask);
                    }
                    _ => cache.masks[i] = None,
                }
                cache.post[i] = h;
            }
            cache.pre[i] = z;
        }
        cache.output = cache.pre[n - 1][0];
        Ok(cache.output)
    }

    /// Score of one input with dropout disabled.
    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, None, &mut cache)
    }

    /// Scores many inputs, reusing one activation buffer.
    pub fn predict_batch<X: AsRef<[f64]>>(&self, inputs: &[X]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        inputs
            .iter()
            .map(|x| self.forward_into(x.as_ref(), None, &mut cache))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu(&[-3.0, -0.5]), vec![0.0, 0.0]);
        assert_eq!(relu(&[0.5, 4.0]), vec![0.5, 4.0]);
    }

    #[test]
    fn init_shapes_and_zero_biases() {
        let m = init_model(1600, 9).unwrap();
        assert_eq!(m.shapes(), vec![(1600, 256), (256, 128), (128, 64), (64, 32), (32, 1)]);
        assert!(m.layers().iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let limit = libm::sqrt(6.0 / 1600.0);
        assert!(m.layers()[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(init_model(600, 3).unwrap(), init_model(600, 3).unwrap());
        assert_ne!(init_model(600, 3).unwrap(), init_model(600, 4).unwrap());
        assert!(init_model(0, 3).is_err());
    }

    #[test]
    fn zero_model_predicts_zero() {
        let m = MlpModel::zeros(5, &HIDDEN_SIZES).unwrap();
        assert_eq!(m.predict(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), 0.0);
    }

    #[test]
    fn identity_chain() {
        let layers = vec![DenseLayer {
            fan_in: 1,
            fan_out: 1,
            weights: vec![1.0],
            biases: vec![0.0],
        }; 3];
        let m = MlpModel::from_layers(layers, true).unwrap();
        assert_eq!(m.predict(&[1.0]).unwrap(), 1.0);
        assert_eq!(m.predict(&[-1.0]).unwrap(), 0.0);
    }

    #[test]
    fn forward_repeatable_and_matches_predict() {
        let m = MlpModel::new(8, &[4, 3, 2], true, 1).unwrap();
        let x = [0.1, -0.3, 0.2, 0.9, -1.0, 0.0, 0.4, 0.5];
        let (a, _) = m.forward(&x).unwrap();
        let (b, _) = m.forward(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(m.predict(&x).unwrap().to_bits(), a.to_bits());
        assert_eq!(m.predict_batch(&[x, x]).unwrap(), vec![a, a]);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let m = MlpModel::new(8, &[4], true, 1).unwrap();
        assert!(matches!(m.predict(&[0.0; 7]), Err(Error::DimensionMismatch { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(m.forward_train(&[0.0; 8], 1.0, &mut rng).is_err());
    }

    #[test]
    fn from_layers_validates_chain() {
        let bad = vec![DenseLayer::zeros(3, 2), DenseLayer::zeros(3, 1)];
        assert!(MlpModel::from_layers(bad, true).is_err());
        let bad = vec![DenseLayer::zeros(3, 2)];
        assert!(MlpModel::from_layers(bad, true).is_err());
        let mut nan = DenseLayer::zeros(2, 1);
        nan.weights[0] = f64::NAN;
        assert!(MlpModel::from_layers(vec![nan], true).is_err());
    }
}
