//! Scaling of pointwise DNN scoring versus Global PPR re-ranking with the
//! size of the candidate pool.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topic_image_core::baselines::{personalized_pagerank, PageRankConfig, SimilarityGraph};
use topic_image_core::features::{FeatureConfig, FeatureDims};
use topic_image_core::neuralnet::{init_model, ForwardCache};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Number of (topic, image) pairs scored by the network.
    pub dnn_sizes: Vec<usize>,
    /// Number of images in the PPR graph.
    pub ppr_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub dims: FeatureDims,
    pub pagerank: PageRankConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dnn_sizes: vec![1000, 2000, 4000, 8000, 16000],
            ppr_sizes: vec![250, 500, 1000, 2000, 4000],
            trials: 3,
            seed: 0,
            dims: FeatureDims::default(),
            pagerank: PageRankConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    DnnScoring,
    PprGraphBuild,
    PprTotal,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::DnnScoring => "dnn-scoring",
            Measure::PprGraphBuild => "global-ppr-graph",
            Measure::PprTotal => "global-ppr-total",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub measure: Measure,
    pub size: usize,
    pub seconds: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub timings: Vec<Timing>,
    pub slopes: Vec<(Measure, f64)>,
}

impl BenchmarkResult {
    pub fn slope(&self, m: Measure) -> f64 {
        self.slopes.iter().find(|(x, _)| *x == m).map_or(f64::NAN, |(_, s)| *s)
    }

    pub fn medians(&self, m: Measure) -> Vec<(usize, f64)> {
        self.timings.iter().filter(|t| t.measure == m).map(|t| (t.size, t.median)).collect()
    }

    /// Raw timings, one row per measure, size and trial.
    pub fn to_tsv(&self, seed: u64) -> String {
        let mut out = String::new();
        writeln!(out, "# seed\t{seed}").unwrap();
        for (m, s) in &self.slopes {
            writeln!(out, "# slope {}\t{s:.4}", m.name()).unwrap();
        }
        writeln!(out, "measure\tsize\ttrial\tseconds\tmedian_seconds").unwrap();
        for t in &self.timings {
            for (i, s) in t.seconds.iter().enumerate() {
                writeln!(out, "{}\t{}\t{}\t{:.6e}\t{:.6e}", t.measure.name(), t.size, i, s, t.median).unwrap();
            }
        }
        out
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

fn check_sizes(sizes: &[usize], what: &str) -> Result<()> {
    if sizes.len() < 2 || sizes.iter().any(|&s| s < 2) || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("{what} sizes must be at least two ascending values >= 2")));
    }
    Ok(())
}

pub fn benchmark_scaling(config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    check_sizes(&config.dnn_sizes, "DNN")?;
    check_sizes(&config.ppr_sizes, "PPR")?;
    if config.trials == 0 {
        return Err(Error::Config("benchmark needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = config.dims;
    let image_dim = dims.text + dims.visual;
    let mut timings = Vec::new();

    // Pairs cycle through fixed topic and image pools so memory stays flat.
    let model = init_model(FeatureConfig::FULL.input_dim(dims), config.seed)?;
    let topics = random_vectors(&mut rng, 50, dims.text);
    let images = random_vectors(&mut rng, 997, image_dim);
    let mut input = vec![0.0; dims.text + image_dim];
    let mut cache = ForwardCache::default();
    let mut sink = 0.0;
    for &n in &config.dnn_sizes {
        let mut seconds = Vec::with_capacity(config.trials);
        for _ in 0..config.trials {
            let start = Instant::now();
            for p in 0..n {
                input[..dims.text].copy_from_slice(&topics[p % topics.len()]);
                input[dims.text..].copy_from_slice(&images[p % images.len()]);
                sink += model.forward_into(&input, None, &mut cache)?;
            }
            seconds.push(start.elapsed().as_secs_f64());
        }
        timings.push(Timing {
            measure: Measure::DnnScoring,
            size: n,
            median: median(&seconds),
            seconds,
        });
    }
    log::debug!("score checksum {sink}");

    for &n in &config.ppr_sizes {
        let features = random_vectors(&mut rng, n, image_dim);
        let ids: Vec<String> = (0..n).map(|i| format!("img{i}")).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let personalization: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mut build = Vec::with_capacity(config.trials);
        let mut whole = Vec::with_capacity(config.trials);
        for _ in 0..config.trials {
            let start = Instant::now();
            let graph = SimilarityGraph::from_features(ids.clone(), &features, None)?;
            build.push(start.elapsed().as_secs_f64());
            let result = personalized_pagerank(&graph, &personalization, &config.pagerank)?;
            whole.push(start.elapsed().as_secs_f64());
            log::debug!("ppr n={n} iterations={}", result.iterations);
        }
        timings.push(Timing {
            measure: Measure::PprGraphBuild,
            size: n,
            median: median(&build),
            seconds: build,
        });
        timings.push(Timing {
            measure: Measure::PprTotal,
            size: n,
            median: median(&whole),
            seconds: whole,
        });
    }

    let mut result = BenchmarkResult {
        timings,
        slopes: Vec::new(),
    };
    result.slopes = [Measure::DnnScoring, Measure::PprGraphBuild, Measure::PprTotal]
        .into_iter()
        .map(|m| (m, loglog_slope(&result.medians(m))))
        .collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let lin: Vec<(usize, f64)> = [10, 20, 40].iter().map(|&n| (n, 3.0 * n as f64)).collect();
        let quad: Vec<(usize, f64)> = [10, 20, 40].iter().map(|&n| (n, 0.1 * (n * n) as f64)).collect();
        assert!((loglog_slope(&lin) - 1.0).abs() < 1e-12);
        assert!((loglog_slope(&quad) - 2.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn rejects_bad_sizes() {
        let c = BenchmarkConfig {
            dnn_sizes: vec![100, 50],
            ..BenchmarkConfig::default()
        };
        assert!(benchmark_scaling(&c).is_err());
    }

    #[test]
    fn tiny_run_produces_every_row() {
        let c = BenchmarkConfig {
            dnn_sizes: vec![4, 8],
            ppr_sizes: vec![4, 8],
            trials: 1,
            dims: FeatureDims { text: 4, visual: 6 },
            ..BenchmarkConfig::default()
        };
        let r = benchmark_scaling(&c).unwrap();
        assert_eq!(r.timings.len(), 6);
        assert!(r.to_tsv(0).contains("global-ppr-graph\t8\t0\t"));
    }
}
