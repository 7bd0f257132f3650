use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::ImageCandidate;
use crate::embeddings::EmbeddingTable;
use crate::{Error, Result};

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (libm::sqrt(na) * libm::sqrt(nb))
}

/// `[caption mean vector || visual vector]` used for image-image similarity.
pub fn image_feature(image: &ImageCandidate, table: &EmbeddingTable) -> Vec<f64> {
    let mut f = table.mean_pool_or_zero(&image.caption_tokens).vector;
    f.extend_from_slice(&image.visual);
    f
}

/// Cosine of the two images' [`image_feature`]s, clamped to `[0, 1]`.
pub fn image_similarity(a: &ImageCandidate, b: &ImageCandidate, table: &EmbeddingTable) -> f64 {
    cosine(&image_feature(a, table), &image_feature(b, table)).clamp(0.0, 1.0)
}

/// Dense undirected weighted graph over images.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    ids: Vec<String>,
    /// Row-major `n x n`, symmetric, zero diagonal.
    weights: Vec<f64>,
}

impl SimilarityGraph {
    pub fn new(ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if weights.len() != n * n {
            return Err(Error::dim("graph weights", n * n, weights.len()));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::Validation(format!("self-loop on node {}", ids[i])));
            }
            for j in i + 1..n {
                let w = weights[i * n + j];
                if !(w >= 0.0 && w.is_finite()) || w != weights[j * n + i] {
                    return Err(Error::Validation(format!(
                        "edge {}-{} must be finite, nonnegative and symmetric",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(Self { ids, weights })
    }

    /// Pairwise clamped cosine over `features`, optionally keeping only each
    /// node's `top_m` strongest edges (an edge survives if either endpoint
    /// keeps it). Costs `O(n^2 * dim)`.
    pub fn from_features(ids: Vec<String>, features: &[Vec<f64>], top_m: Option<usize>) -> Result<Self> {
        let n = ids.len();
        if features.len() != n {
            return Err(Error::dim("graph features", n, features.len()));
        }
        let unit: Vec<Vec<f64>> = features
            .iter()
            .map(|f| {
                let norm = libm::sqrt(f.iter().map(|x| x * x).sum());
                if norm == 0.0 {
                    vec![0.0; f.len()]
                } else {
                    f.iter().map(|x| x / norm).collect()
                }
            })
            .collect();
        let mut weights = vec![0.0; n * n];
        // Tiled so each block pair stays cache resident on large pools.
        const BLOCK: usize = 32;
        for bi in (0..n).step_by(BLOCK) {
            for bj in (bi..n).step_by(BLOCK) {
                for i in bi..(bi + BLOCK).min(n) {
                    for j in bj.max(i + 1)..(bj + BLOCK).min(n) {
                        let dot: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
                        let w = dot.clamp(0.0, 1.0);
                        weights[i * n + j] = w;
                        weights[j * n + i] = w;
                    }
                }
            }
        }
        if let Some(m) = top_m {
            weights = keep_top_m(&weights, n, m);
        }
        Ok(Self { ids, weights })
    }

    pub fn from_images(
        ids: Vec<String>,
        images: &[&ImageCandidate],
        table: &EmbeddingTable,
        top_m: Option<usize>,
    ) -> Result<Self> {
        let features: Vec<Vec<f64>> = images.iter().map(|im| image_feature(im, table)).collect();
        Self::from_features(ids, &features, top_m)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Graph with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ids: self.ids.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

fn keep_top_m(weights: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut keep = vec![false; n * n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i && weights[i * n + j] > 0.0));
        order.sort_by(|&a, &b| {
            weights[i * n + b]
                .partial_cmp(&weights[i * n + a])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(m) {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    weights
        .iter()
        .zip(keep)
        .map(|(&w, k)| if k { w } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn image(caption: &[&str], visual: &[f64]) -> ImageCandidate {
        ImageCandidate::new(
            "x",
            caption.iter().map(|s| s.to_string()).collect(),
            visual.to_vec(),
            None,
        )
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("a", vec![1.0, 0.0]).unwrap();
        t.insert("b", vec![0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn similarity_examples() {
        let t = table();
        let a = image(&["a"], &[0.0, 0.0]);
        let b = image(&["b"], &[0.0, 0.0]);
        assert!((image_similarity(&a, &a, &t) - 1.0).abs() < 1e-15);
        assert_eq!(image_similarity(&a, &b, &t), 0.0);
        let c = image(&["a", "b"], &[0.3, 0.1]);
        assert_eq!(image_similarity(&a, &c, &t), image_similarity(&c, &a, &t));
        let z = image(&[], &[0.0, 0.0]);
        assert_eq!(image_similarity(&z, &a, &t), 0.0);
    }

    #[test]
    fn negative_cosine_is_clamped() {
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]), -1.0);
        let g = SimilarityGraph::from_features(
            vec!["p".into(), "q".into()],
            &[vec![1.0, 0.0], vec![-1.0, 0.0]],
            None,
        )
        .unwrap();
        assert_eq!(g.weight(0, 1), 0.0);
    }

    #[test]
    fn new_validates() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(SimilarityGraph::new(ids.clone(), vec![0.0, 0.5, 0.5, 0.0]).is_ok());
        assert!(SimilarityGraph::new(ids.clone(), vec![0.0, 0.5, 0.4, 0.0]).is_err());
        assert!(SimilarityGraph::new(ids.clone(), vec![1.0, 0.5, 0.5, 0.0]).is_err());
        assert!(SimilarityGraph::new(ids.clone(), vec![0.0, -0.5, -0.5, 0.0]).is_err());
        assert!(SimilarityGraph::new(ids, vec![0.0; 3]).is_err());
    }

    #[test]
    fn top_m_keeps_strongest_symmetric_edges() {
        let feats = vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.1, 0.0],
            vec![1.0, 0.0, 0.5],
            vec![0.0, 0.0, 1.0],
        ];
        let ids: Vec<String> = (0..4).map(|i| format!("n{i}")).collect();
        let full = SimilarityGraph::from_features(ids.clone(), &feats, None).unwrap();
        let sparse = SimilarityGraph::from_features(ids.clone(), &feats, Some(1)).unwrap();
        SimilarityGraph::new(ids, sparse.weights().to_vec()).unwrap();
        assert_eq!(sparse.weight(0, 1), full.weight(0, 1));
        assert_eq!(sparse.weight(2, 3), full.weight(2, 3));
        assert_eq!(sparse.weight(0, 3), 0.0);
    }
}
