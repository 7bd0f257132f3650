//! Run configuration: defaults, then a flat `key = value` file, then CLI
//! flags, each layer overriding the previous one.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use topic_image_core::baselines::PprOptions;
use topic_image_core::dataset::DatasetOptions;
use topic_image_core::features::{FeatureConfig, FeatureDims};
use topic_image_core::metrics::Gain;
use topic_image_core::neuralnet::TrainConfig;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embeddings: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub visuals: Option<PathBuf>,
    pub features: FeatureConfig,
    pub dims: FeatureDims,
    pub strict: bool,
    pub train: TrainConfig,
    pub negatives_per_topic: usize,
    pub folds: usize,
    pub seed: u64,
    pub ppr: PprOptions,
    pub ridge_l2: f64,
    pub gain: Gain,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            embeddings: None,
            topics: None,
            candidates: None,
            visuals: None,
            features: FeatureConfig::FULL,
            dims: FeatureDims::default(),
            strict: true,
            train: TrainConfig::default(),
            negatives_per_topic: 20,
            folds: 5,
            seed: 42,
            ppr: PprOptions::default(),
            ridge_l2: 1.0,
            gain: Gain::Linear,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

impl RunConfig {
    /// Sets one option by its config-file key. Dashes and underscores are
    /// interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "embeddings" => self.embeddings = Some(v.into()),
            "topics" => self.topics = Some(v.into()),
            "candidates" => self.candidates = Some(v.into()),
            "visuals" => self.visuals = Some(v.into()),
            "features" => self.features = v.parse()?,
            "embedding_dim" | "text_dim" => self.dims.text = parse(&key, v)?,
            "visual_dim" => self.dims.visual = parse(&key, v)?,
            "strict" => self.strict = parse(&key, v)?,
            "epochs" => self.train.epochs = parse(&key, v)?,
            "batch_size" => self.train.batch_size = parse(&key, v)?,
            "dropout" => self.train.dropout_rate = parse(&key, v)?,
            "lr" | "learning_rate" => self.train.optimizer.learning_rate = parse(&key, v)?,
            "decay" | "rmsprop_decay" => self.train.optimizer.decay = parse(&key, v)?,
            "epsilon" => self.train.optimizer.epsilon = parse(&key, v)?,
            "negatives" => self.negatives_per_topic = parse(&key, v)?,
            "folds" => self.folds = parse(&key, v)?,
            "seed" => self.seed = parse(&key, v)?,
            "damping" => self.ppr.pagerank.damping = parse(&key, v)?,
            "tol" | "tolerance" => self.ppr.pagerank.tolerance = parse(&key, v)?,
            "max_iters" => self.ppr.pagerank.max_iters = parse(&key, v)?,
            "top_m" => self.ppr.top_m = if v == "none" { None } else { Some(parse(&key, v)?) },
            "l2" | "ridge_l2" => self.ridge_l2 = parse(&key, v)?,
            "gain" => self.gain = v.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.into(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                path: path.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.ppr.pagerank.validate()?;
        if self.folds < 2 {
            return Err(Error::Config("folds must be >= 2".into()));
        }
        if self.dims.text == 0 || self.dims.visual == 0 {
            return Err(Error::Config("feature dimensions must be positive".into()));
        }
        if !(self.ridge_l2 >= 0.0) {
            return Err(Error::Config("l2 must be >= 0".into()));
        }
        for (name, p) in self.paths() {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!("{name} file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    fn paths(&self) -> [(&'static str, Option<&PathBuf>); 4] {
        [
            ("embeddings", self.embeddings.as_ref()),
            ("topics", self.topics.as_ref()),
            ("candidates", self.candidates.as_ref()),
            ("visuals", self.visuals.as_ref()),
        ]
    }

    pub fn require(&self, name: &str) -> Result<&Path> {
        self.paths()
            .into_iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, p)| p)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::Config(format!("--{name} is required")))
    }

    pub fn dataset_options(&self) -> DatasetOptions {
        DatasetOptions {
            strict: self.strict,
            visual_dim: self.dims.visual,
        }
    }

    /// Every setting as sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let mut lines = vec![
            format!("batch_size={}", self.train.batch_size),
            format!("candidates={}", opt(&self.candidates)),
            format!("damping={}", self.ppr.pagerank.damping),
            format!("decay={}", self.train.optimizer.decay),
            format!("dropout={}", self.train.dropout_rate),
            format!("embedding_dim={}", self.dims.text),
            format!("embeddings={}", opt(&self.embeddings)),
            format!("epochs={}", self.train.epochs),
            format!("epsilon={}", self.train.optimizer.epsilon),
            format!("features={}", self.features),
            format!("folds={}", self.folds),
            format!("gain={}", self.gain.name()),
            format!("l2={}", self.ridge_l2),
            format!("lr={}", self.train.optimizer.learning_rate),
            format!("max_iters={}", self.ppr.pagerank.max_iters),
            format!("negatives={}", self.negatives_per_topic),
            format!("seed={}", self.seed),
            format!("strict={}", self.strict),
            format!("tol={}", self.ppr.pagerank.tolerance),
            format!(
                "top_m={}",
                self.ppr.top_m.map_or("none".to_string(), |m| m.to_string())
            ),
            format!("topics={}", opt(&self.topics)),
            format!("visual_dim={}", self.dims.visual),
            format!("visuals={}", opt(&self.visuals)),
        ];
        lines.sort();
        lines.join("\n")
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }
}
