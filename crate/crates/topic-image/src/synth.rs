//! Synthetic corpora with a known relevance signal.
//!
//! Words belong to latent themes; each topic draws its terms from one theme.
//! A candidate has a hidden relevance `alpha`: that fraction of its caption
//! words come from the topic's theme, and its visual vector is a noisy
//! projection of a blend of the topic vector and an unrelated theme. Gold
//! ratings are a noisy monotone function of
//! `(cos(topic, caption) + cos(P topic, visual)) / 2`, where `P` is the fixed
//! text-to-visual projection: the score's rank in the corpus scaled to
//! `[0, 3]`, plus Gaussian noise, quantized to thirds.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use topic_image_core::baselines::cosine;
use topic_image_core::dataset::{Dataset, DatasetOptions, ImageCandidate, Topic};
use topic_image_core::embeddings::EmbeddingTable;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{write_dataset, write_embeddings, DatasetPaths};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub topics: usize,
    pub candidates_per_topic: usize,
    pub terms_per_topic: usize,
    pub text_dim: usize,
    pub visual_dim: usize,
    pub themes: usize,
    pub words_per_theme: usize,
    pub caption_len: usize,
    /// Spread of word vectors around their theme centroid.
    pub word_noise: f64,
    pub visual_noise: f64,
    /// Standard deviation of the rating noise, in rating points.
    pub rating_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 300,
            candidates_per_topic: 20,
            terms_per_topic: 10,
            text_dim: 300,
            visual_dim: 1000,
            themes: 12,
            words_per_theme: 40,
            caption_len: 8,
            word_noise: 0.5,
            visual_noise: 0.2,
            rating_noise: 0.25,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Low-dimensional corpus that trains quickly.
    pub fn small(topics: usize, seed: u64) -> Self {
        Self {
            topics,
            text_dim: 16,
            visual_dim: 32,
            seed,
            ..Self::default()
        }
    }
}

pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub table: EmbeddingTable,
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn mean(vectors: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(*v) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= vectors.len() as f64);
    out
}

fn project(p: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    p.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn word(theme: usize, index: usize) -> String {
    format!("t{theme}w{index}")
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    assert!(cfg.themes >= 2, "need at least two themes");
    assert!(cfg.words_per_theme >= cfg.terms_per_topic);

    let centroids: Vec<Vec<f64>> = (0..cfg.themes).map(|_| gaussian(&mut rng, cfg.text_dim, 1.0)).collect();
    let mut table = EmbeddingTable::new(cfg.text_dim)?;
    let mut words: Vec<Vec<Vec<f64>>> = Vec::with_capacity(cfg.themes);
    for (k, c) in centroids.iter().enumerate() {
        let mut theme_words = Vec::with_capacity(cfg.words_per_theme);
        for w in 0..cfg.words_per_theme {
            let v: Vec<f64> = c
                .iter()
                .zip(gaussian(&mut rng, cfg.text_dim, cfg.word_noise))
                .map(|(a, b)| a + b)
                .collect();
            table.insert(&word(k, w), v.clone())?;
            theme_words.push(v);
        }
        words.push(theme_words);
    }
    let scale = 1.0 / (cfg.text_dim as f64).sqrt();
    let projection: Vec<Vec<f64>> = (0..cfg.visual_dim).map(|_| gaussian(&mut rng, cfg.text_dim, scale)).collect();

    let mut topics = Vec::with_capacity(cfg.topics);
    let mut raw: Vec<Vec<(String, Vec<String>, Vec<f64>, f64)>> = Vec::with_capacity(cfg.topics);
    for i in 0..cfg.topics {
        let theme = rng.random_range(0..cfg.themes);
        let term_idx = rand::seq::index::sample(&mut rng, cfg.words_per_theme, cfg.terms_per_topic).into_vec();
        let terms: Vec<String> = term_idx.iter().map(|&w| word(theme, w)).collect();
        let tv = mean(&term_idx.iter().map(|&w| words[theme][w].as_slice()).collect::<Vec<_>>());
        let ptv = project(&projection, &tv);

        // Stratified relevance so every topic spans the whole range.
        let n = cfg.candidates_per_topic;
        let mut alphas: Vec<f64> = (0..n).map(|j| (j as f64 + rng.random::<f64>()) / n as f64).collect();
        alphas.shuffle(&mut rng);

        let mut cands = Vec::with_capacity(n);
        for (j, &alpha) in alphas.iter().enumerate() {
            let mut other = rng.random_range(0..cfg.themes - 1);
            if other >= theme {
                other += 1;
            }
            let mut tokens = Vec::with_capacity(cfg.caption_len);
            let mut vecs: Vec<&[f64]> = Vec::with_capacity(cfg.caption_len);
            for _ in 0..cfg.caption_len {
                let k = if rng.random::<f64>() < alpha {
                    theme
                } else {
                    let mut k = rng.random_range(0..cfg.themes - 1);
                    if k >= theme {
                        k += 1;
                    }
                    k
                };
                let w = rng.random_range(0..cfg.words_per_theme);
                tokens.push(word(k, w));
                vecs.push(&words[k][w]);
            }
            let cv = mean(&vecs);
            let blend: Vec<f64> = tv
                .iter()
                .zip(&centroids[other])
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect();
            let visual: Vec<f64> = project(&projection, &blend)
                .into_iter()
                .zip(gaussian(&mut rng, cfg.visual_dim, cfg.visual_noise))
                .map(|(a, b)| a + b)
                .collect();
            let s = 0.5 * (cosine(&tv, &cv) + cosine(&ptv, &visual));
            cands.push((format!("img{i:04}_{j:02}"), tokens, visual, s));
        }
        topics.push(Topic::new(format!("topic{i:04}"), terms));
        raw.push(cands);
    }

    // Scores map to ratings through their rank in the corpus, which spreads
    // gold ratings evenly over the scale.
    let mut sorted: Vec<f64> = raw.iter().flatten().map(|c| c.3).collect();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1).max(1) as f64;
    let candidates = raw
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|(id, tokens, visual, s)| {
                    let rank = sorted.partition_point(|&x| x < s) as f64;
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let noisy = 3.0 * rank / last + cfg.rating_noise * z;
                    // Quantized like the mean of three 0-3 judgements.
                    let rating = (noisy.clamp(0.0, 3.0) * 3.0).round() / 3.0;
                    ImageCandidate::new(id, tokens, visual, Some(rating))
                })
                .collect()
        })
        .collect();

    let strict = cfg.terms_per_topic == 10 && cfg.candidates_per_topic == 20;
    let options = DatasetOptions {
        strict,
        visual_dim: cfg.visual_dim,
    };
    Ok(SyntheticCorpus {
        dataset: Dataset::new(topics, candidates, options)?,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFiles {
    pub embeddings: PathBuf,
    pub topics: PathBuf,
    pub candidates: PathBuf,
    pub visuals: PathBuf,
}

impl CorpusFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            embeddings: dir.join("embeddings.txt"),
            topics: dir.join("topics.tsv"),
            candidates: dir.join("candidates.tsv"),
            visuals: dir.join("visuals.tsv"),
        }
    }

    /// Points `config` at these files.
    pub fn apply(&self, config: &mut RunConfig) {
        config.embeddings = Some(self.embeddings.clone());
        config.topics = Some(self.topics.clone());
        config.candidates = Some(self.candidates.clone());
        config.visuals = Some(self.visuals.clone());
    }
}

pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus) -> Result<CorpusFiles> {
    let files = CorpusFiles::in_dir(dir);
    write_embeddings(&files.embeddings, &corpus.table)?;
    write_dataset(
        &DatasetPaths {
            topics: &files.topics,
            candidates: &files.candidates,
            visuals: &files.visuals,
        },
        &corpus.dataset,
    )?;
    Ok(files)
}
