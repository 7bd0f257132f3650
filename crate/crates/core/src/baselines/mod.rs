//! Comparison methods: graph re-ranking with personalized PageRank over
//! image similarity, and a ridge-regression pointwise scorer.

mod graph;
mod linear;
mod pagerank;
mod rerank;

pub use graph::{cosine, image_feature, image_similarity, SimilarityGraph};
pub use linear::{train_linear, LinearModel};
pub use pagerank::{personalized_pagerank, PageRankConfig, PageRankResult};
pub use rerank::{global_ppr_rank, local_ppr_rank, topic_personalization, GlobalPprIndex, PprOptions};
