//! Scoring core for labeling topics with images.
//!
//! A topic (its ten most probable terms) and a candidate image (caption text
//! plus a precomputed visual vector) are mapped to one input vector, and a
//! small feed-forward regressor estimates how well the image represents the
//! topic. Because each pair is scored independently, ranking `n` candidates
//! costs `n` forward passes.
//!
//! The crate is `no_std` and only needs `alloc`. File parsing, model
//! serialization, the experiment harness and the CLI live in the
//! `topic-image` companion crate.
//!
//! Modules:
//!
//! - [`embeddings`]: word-vector table and mean pooling.
//! - [`features`]: input vector assembly and feature ablations.
//! - [`neuralnet`]: dense ReLU network, inverted dropout, MAE loss,
//!   backpropagation, RMSProp and the mini-batch training loop.
//! - [`dataset`]: topics, candidates, negative sampling and k-fold splits.
//! - [`metrics`]: Top-1 average rating and nDCG@k.
//! - [`baselines`]: personalized PageRank re-ranking and ridge regression.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod baselines;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod features;
pub mod metrics;
pub mod neuralnet;

pub use error::{Error, Result};

/// Dimension of the pretrained word vectors used for topics and captions.
pub const TEXT_DIM: usize = 300;
/// Dimension of the precomputed CNN class-probability vector of an image.
pub const VISUAL_DIM: usize = 1000;
