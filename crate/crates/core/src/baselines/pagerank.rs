use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::SimilarityGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PageRankConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates drops below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tolerance: 1e-10,
            max_iters: 200,
        }
    }
}

impl PageRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::arg(format!("damping {} outside (0, 1)", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::arg(format!("tolerance {} must be > 0", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

/// Power iteration for
/// `r = damping * P^T r + (damping * dangling(r) + 1 - damping) * p`
/// where `P` is the row-normalized weight matrix and `dangling(r)` is the
/// mass sitting on nodes without edges, which is sent back through the
/// personalization `p`.
pub fn personalized_pagerank(
    graph: &SimilarityGraph,
    personalization: &[f64],
    config: &PageRankConfig,
) -> Result<PageRankResult> {
    config.validate()?;
    let n = graph.len();
    if personalization.len() != n {
        return Err(Error::dim("personalization", n, personalization.len()));
    }
    if personalization.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::arg("personalization must be finite and nonnegative"));
    }
    let total: f64 = personalization.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("personalization sums to {total}, expected 1")));
    }
    if n == 0 {
        return Ok(PageRankResult {
            scores: Vec::new(),
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }

    let weights = graph.weights();
    let transition: Vec<f64> = weights
        .chunks_exact(n)
        .flat_map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(move |w| if s > 0.0 { w / s } else { 0.0 })
        })
        .collect();
    let dangling: Vec<bool> = weights
        .chunks_exact(n)
        .map(|row| row.iter().all(|&w| w == 0.0))
        .collect();

    let d = config.damping;
    let mut rank = personalization.to_vec();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let lost: f64 = rank
            .iter()
            .zip(&dangling)
            .filter(|(_, &dg)| dg)
            .map(|(r, _)| r)
            .sum();
        let teleport = d * lost + (1.0 - d);
        for (nx, p) in next.iter_mut().zip(personalization) {
            *nx = teleport * p;
        }
        for (r, row) in rank.iter().zip(transition.chunks_exact(n)) {
            let push = d * r;
            if push == 0.0 {
                continue;
            }
            for (nx, t) in next.iter_mut().zip(row) {
                *nx += push * t;
            }
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut rank, &mut next);
        if residual < config.tolerance {
            break;
        }
    }
    Ok(PageRankResult {
        scores: rank,
        iterations,
        residual,
        converged: residual < config.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    #[test]
    fn symmetric_pair() {
        let g = SimilarityGraph::new(ids(2), vec![0.0, 0.7, 0.7, 0.0]).unwrap();
        let r = personalized_pagerank(&g, &[0.5, 0.5], &PageRankConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.scores[0] - 0.5).abs() < 1e-12 && (r.scores[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_nodes_return_personalization() {
        let g = SimilarityGraph::new(ids(3), vec![0.0; 9]).unwrap();
        let p = [0.2, 0.3, 0.5];
        let r = personalized_pagerank(&g, &p, &PageRankConfig::default()).unwrap();
        for (a, b) in r.scores.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = SimilarityGraph::new(ids(3), vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.2, 0.0, 0.2, 0.0]).unwrap();
        let cfg = PageRankConfig {
            max_iters: 2,
            ..PageRankConfig::default()
        };
        let r = personalized_pagerank(&g, &[1.0, 0.0, 0.0], &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        let g = SimilarityGraph::new(ids(2), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let cfg = PageRankConfig::default();
        assert!(personalized_pagerank(&g, &[0.5, 0.4], &cfg).is_err());
        assert!(personalized_pagerank(&g, &[1.0], &cfg).is_err());
        assert!(personalized_pagerank(&g, &[1.5, -0.5], &cfg).is_err());
        let bad = PageRankConfig { damping: 1.0, ..cfg };
        assert!(personalized_pagerank(&g, &[0.5, 0.5], &bad).is_err());
    }
}
