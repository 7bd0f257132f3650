//! JSON container for trained networks.
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! rounding, so a saved model predicts bit-identically after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};
use topic_image_core::features::{FeatureConfig, FeatureDims};
use topic_image_core::neuralnet::{MlpModel, TrainConfig};

use crate::error::{Error, Result};

pub const FORMAT: &str = "topic-image-mlp";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub features: FeatureConfig,
    pub dims: FeatureDims,
    pub seed: u64,
    pub train: TrainConfig,
    /// `(fan_in, fan_out)` per layer, duplicated for readers that skip the
    /// parameters.
    pub layer_sizes: Vec<(usize, usize)>,
    pub model: MlpModel,
}

impl ModelFile {
    pub fn new(model: MlpModel, features: FeatureConfig, dims: FeatureDims, train: TrainConfig) -> Self {
        Self {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            features,
            dims,
            seed: train.seed,
            train,
            layer_sizes: model.shapes(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        file.check()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Model(format!("unexpected format '{}'", self.format)));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (this build reads {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.model.validate()?;
        if self.layer_sizes != self.model.shapes() {
            return Err(Error::Model("layer_sizes do not match the parameters".into()));
        }
        let expected = self.features.input_dim(self.dims);
        if self.model.input_dim() != expected {
            return Err(Error::Model(format!(
                "model input {} does not match feature set {} ({expected})",
                self.model.input_dim(),
                self.features
            )));
        }
        Ok(())
    }
}
