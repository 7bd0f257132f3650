use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{cosine, image_feature, SimilarityGraph};
use super::pagerank::{personalized_pagerank, PageRankConfig};
use crate::dataset::{ImageCandidate, Topic};
use crate::embeddings::EmbeddingTable;
use crate::metrics::RankedList;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PprOptions {
    pub pagerank: PageRankConfig,
    /// Keep only each node's strongest `m` edges. `None` keeps all edges.
    pub top_m: Option<usize>,
}

/// Teleport distribution for a topic: cosine between the topic's mean term
/// vector and each caption's mean vector, floored at zero and normalized.
/// Uniform when every similarity is zero.
pub fn topic_personalization(topic_vec: &[f64], caption_vecs: &[Vec<f64>]) -> Vec<f64> {
    let raw: Vec<f64> = caption_vecs
        .iter()
        .map(|c| cosine(topic_vec, c).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

/// Similarity graph over a pool of images, built once and queried per topic.
#[derive(Debug, Clone)]
pub struct GlobalPprIndex {
    graph: SimilarityGraph,
    captions: Vec<Vec<f64>>,
    golds: Vec<Option<f64>>,
}

impl GlobalPprIndex {
    pub fn build(pool: &[&ImageCandidate], table: &EmbeddingTable, options: &PprOptions) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::arg("PageRank pool is empty"));
        }
        let ids = pool.iter().map(|c| c.image_id.clone()).collect();
        let features: Vec<Vec<f64>> = pool.iter().map(|c| image_feature(c, table)).collect();
        let graph = SimilarityGraph::from_features(ids, &features, options.top_m)?;
        let captions = pool
            .iter()
            .map(|c| table.mean_pool_or_zero(&c.caption_tokens).vector)
            .collect();
        Ok(Self {
            graph,
            captions,
            golds: pool.iter().map(|c| c.rating).collect(),
        })
    }

    pub fn graph(&self) -> &SimilarityGraph {
        &self.graph
    }

    /// Runs PageRank personalized to `topic` and ranks the pool nodes listed
    /// in `own` by their score.
    pub fn rank(
        &self,
        topic: &Topic,
        own: &[usize],
        table: &EmbeddingTable,
        options: &PprOptions,
    ) -> Result<RankedList> {
        if own.is_empty() {
            return Err(Error::arg("topic has no candidates in the pool"));
        }
        if let Some(&bad) = own.iter().find(|&&i| i >= self.graph.len()) {
            return Err(Error::arg(alloc::format!("pool index {bad} out of range")));
        }
        let topic_vec = table.mean_pool(&topic.terms)?.vector;
        let p = topic_personalization(&topic_vec, &self.captions);
        let result = personalized_pagerank(&self.graph, &p, &options.pagerank)?;
        let scored: Vec<(String, f64, Option<f64>)> = own
            .iter()
            .map(|&i| (self.graph.ids()[i].clone(), result.scores[i], self.golds[i]))
            .collect();
        Ok(RankedList::from_scores(topic.id.clone(), scored))
    }
}

/// Re-ranks a topic's own candidates by PageRank over a graph of just those
/// candidates.
pub fn local_ppr_rank(
    topic: &Topic,
    candidates: &[ImageCandidate],
    table: &EmbeddingTable,
    options: &PprOptions,
) -> Result<RankedList> {
    let pool: Vec<&ImageCandidate> = candidates.iter().collect();
    let index = GlobalPprIndex::build(&pool, table, options)?;
    let own: Vec<usize> = (0..pool.len()).collect();
    index.rank(topic, &own, table, options)
}

/// PageRank over every image in `pool`; returns the topic's own candidates
/// (`own` indexes into `pool`) ordered by their global score.
pub fn global_ppr_rank(
    topic: &Topic,
    pool: &[&ImageCandidate],
    own: &[usize],
    table: &EmbeddingTable,
    options: &PprOptions,
) -> Result<RankedList> {
    GlobalPprIndex::build(pool, table, options)?.rank(topic, own, table, options)
}
