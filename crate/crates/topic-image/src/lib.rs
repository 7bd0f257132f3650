//! File formats, cross-validation harness, reports, benchmarks and the
//! command-line front end built on `topic-image-core`.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod model_file;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
