//! Topics, rated candidate images, negative sampling and topic-level k-fold
//! splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, VISUAL_DIM};

pub const TERMS_PER_TOPIC: usize = 10;
pub const CANDIDATES_PER_TOPIC: usize = 20;
pub const MIN_RATING: f64 = 0.0;
pub const MAX_RATING: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub id: String,
    pub terms: Vec<String>,
}

impl Topic {
    pub fn new(id: impl Into<String>, terms: Vec<String>) -> Self {
        Self {
            id: id.into(),
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageCandidate {
    pub image_id: String,
    pub caption_tokens: Vec<String>,
    pub visual: Vec<f64>,
    /// Mean human rating in `[0, 3]`, absent when unrated.
    pub rating: Option<f64>,
}

impl ImageCandidate {
    pub fn new(
        image_id: impl Into<String>,
        caption_tokens: Vec<String>,
        visual: Vec<f64>,
        rating: Option<f64>,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            caption_tokens,
            visual,
            rating,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetOptions {
    /// Require exactly 10 terms per topic and 20 candidates per topic.
    pub strict: bool,
    pub visual_dim: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            strict: true,
            visual_dim: VISUAL_DIM,
        }
    }
}

impl DatasetOptions {
    pub fn lenient(visual_dim: usize) -> Self {
        Self {
            strict: false,
            visual_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub topics: usize,
    pub candidates: usize,
    pub distinct_images: usize,
    pub unrated: usize,
}

/// Topics with their candidate lists, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    topics: Vec<Topic>,
    candidates: Vec<Vec<ImageCandidate>>,
    index: BTreeMap<String, usize>,
    visual_dim: usize,
}

/// Position of one candidate: topic index and index within that topic's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateRef {
    pub topic: usize,
    pub index: usize,
}

impl Dataset {
    /// `candidates[i]` belongs to `topics[i]`.
    pub fn new(
        topics: Vec<Topic>,
        candidates: Vec<Vec<ImageCandidate>>,
        options: DatasetOptions,
    ) -> Result<Self> {
        if topics.len() != candidates.len() {
            return Err(Error::Validation(format!(
                "{} topics but {} candidate lists",
                topics.len(),
                candidates.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, topic) in topics.iter().enumerate() {
            if index.insert(topic.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate topic id {}", topic.id)));
            }
            if topic.terms.is_empty() {
                return Err(Error::Validation(format!("topic {} has no terms", topic.id)));
            }
            if options.strict && topic.terms.len() != TERMS_PER_TOPIC {
                return Err(Error::Validation(format!(
                    "topic {} has {} terms, expected {TERMS_PER_TOPIC}",
                    topic.id,
                    topic.terms.len()
                )));
            }
        }
        for (topic, list) in topics.iter().zip(&candidates) {
            if list.is_empty() {
                return Err(Error::Validation(format!("topic {} has no candidates", topic.id)));
            }
            if options.strict && list.len() != CANDIDATES_PER_TOPIC {
                return Err(Error::Validation(format!(
                    "topic {} has {} candidates, expected {CANDIDATES_PER_TOPIC}",
                    topic.id,
                    list.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for c in list {
                if !seen.insert(c.image_id.as_str()) {
                    return Err(Error::Validation(format!(
                        "image {} listed twice for topic {}",
                        c.image_id, topic.id
                    )));
                }
                if c.visual.len() != options.visual_dim {
                    return Err(Error::dim(
                        format!("visual vector of image {}", c.image_id),
                        options.visual_dim,
                        c.visual.len(),
                    ));
                }
                if let Some(r) = c.rating {
                    if !(MIN_RATING..=MAX_RATING).contains(&r) {
                        return Err(Error::Validation(format!(
                            "rating {r} of image {} in topic {} is outside [0, 3]",
                            c.image_id, topic.id
                        )));
                    }
                }
            }
        }
        Ok(Self {
            topics,
            candidates,
            index,
            visual_dim: options.visual_dim,
        })
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn visual_dim(&self) -> usize {
        self.visual_dim
    }

    pub fn topic_ids(&self) -> Vec<String> {
        self.topics.iter().map(|t| t.id.clone()).collect()
    }

    pub fn topic_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownTopic(id.into()))
    }

    pub fn topic(&self, id: &str) -> Result<&Topic> {
        Ok(&self.topics[self.topic_index(id)?])
    }

    pub fn candidates_of(&self, id: &str) -> Result<&[ImageCandidate]> {
        Ok(&self.candidates[self.topic_index(id)?])
    }

    pub fn candidates_at(&self, topic: usize) -> &[ImageCandidate] {
        &self.candidates[topic]
    }

    pub fn candidate(&self, r: CandidateRef) -> &ImageCandidate {
        &self.candidates[r.topic][r.index]
    }

    pub fn stats(&self) -> DatasetStats {
        let mut ids = BTreeSet::new();
        let mut rows = 0;
        let mut unrated = 0;
        for c in self.candidates.iter().flatten() {
            ids.insert(c.image_id.as_str());
            rows += 1;
            if c.rating.is_none() {
                unrated += 1;
            }
        }
        DatasetStats {
            topics: self.topics.len(),
            candidates: rows,
            distinct_images: ids.len(),
            unrated,
        }
    }

    /// Candidates eligible as negatives for `topic_id`: the pooled candidates
    /// of `pool_topics`, de-duplicated by image id and excluding any image in
    /// the topic's own candidate list.
    pub fn negative_pool(&self, topic_id: &str, pool_topics: &[String]) -> Result<Vec<CandidateRef>> {
        let target = self.topic_index(topic_id)?;
        let mut excluded: BTreeSet<&str> = self.candidates[target]
            .iter()
            .map(|c| c.image_id.as_str())
            .collect();
        let mut pool = Vec::new();
        for id in pool_topics {
            let t = self.topic_index(id)?;
            if t == target {
                return Err(Error::arg(format!(
                    "negative pool for topic {topic_id} must not contain the topic itself"
                )));
            }
            for (index, c) in self.candidates[t].iter().enumerate() {
                if excluded.insert(c.image_id.as_str()) {
                    pool.push(CandidateRef { topic: t, index });
                }
            }
        }
        Ok(pool)
    }

    /// Samples `k` distinct negative candidates for `topic_id` uniformly
    /// from [`negative_pool`](Self::negative_pool).
    pub fn sample_negative_refs<R: Rng + ?Sized>(
        &self,
        topic_id: &str,
        pool_topics: &[String],
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<CandidateRef>> {
        let pool = self.negative_pool(topic_id, pool_topics)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        if pool.len() < k {
            return Err(Error::PoolExhausted {
                topic_id: topic_id.into(),
                needed: k,
                available: pool.len(),
            });
        }
        Ok(rand::seq::index::sample(rng, pool.len(), k)
            .into_iter()
            .map(|i| pool[i])
            .collect())
    }

    /// Negative examples for `topic_id`: copies of sampled pool images with
    /// rating 0.
    pub fn generate_negatives<R: Rng + ?Sized>(
        &self,
        topic_id: &str,
        pool_topics: &[String],
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<ImageCandidate>> {
        Ok(self
            .sample_negative_refs(topic_id, pool_topics, k, rng)?
            .into_iter()
            .map(|r| {
                let mut c = self.candidate(r).clone();
                c.rating = Some(0.0);
                c
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_topics: Vec<String>,
    pub test_topics: Vec<String>,
}

/// Seeded shuffle followed by a contiguous partition into `k` test blocks.
/// When `k` does not divide the number of topics the leading folds get one
/// extra topic each.
pub fn kfold_split(topic_ids: &[String], k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::arg("k-fold split needs k >= 2"));
    }
    if k > topic_ids.len() {
        return Err(Error::arg(format!(
            "cannot split {} topics into {k} folds",
            topic_ids.len()
        )));
    }
    let mut shuffled = topic_ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = shuffled.len() / k;
    let extra = shuffled.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold_index in 0..k {
        let size = base + usize::from(fold_index < extra);
        let end = start + size;
        let test_topics = shuffled[start..end].to_vec();
        let train_topics = shuffled[..start]
            .iter()
            .chain(&shuffled[end..])
            .cloned()
            .collect();
        folds.push(FoldSplit {
            fold_index,
            train_topics,
            test_topics,
        });
        start = end;
    }
    Ok(folds)
}

/// One (topic, image) pair used for training or testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleRef {
    /// Index of the topic the pair is scored for.
    pub topic: usize,
    /// Where the image comes from; differs from `topic` for negatives.
    pub source: CandidateRef,
    pub rating: Option<f64>,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldExamples {
    pub train: Vec<ExampleRef>,
    pub test: Vec<ExampleRef>,
}

/// Training pairs (every rated own candidate plus `negatives_per_topic`
/// sampled negatives per training topic) and test pairs (every own candidate
/// of each test topic, no negatives).
pub fn build_fold_examples<R: Rng + ?Sized>(
    dataset: &Dataset,
    split: &FoldSplit,
    negatives_per_topic: usize,
    rng: &mut R,
) -> Result<FoldExamples> {
    let mut train = Vec::new();
    for (pos, id) in split.train_topics.iter().enumerate() {
        let t = dataset.topic_index(id)?;
        for (index, c) in dataset.candidates_at(t).iter().enumerate() {
            if let Some(r) = c.rating {
                train.push(ExampleRef {
                    topic: t,
                    source: CandidateRef { topic: t, index },
                    rating: Some(r),
                    negative: false,
                });
            }
        }
        if negatives_per_topic > 0 {
            let pool: Vec<String> = split
                .train_topics
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != pos)
                .map(|(_, s)| s.clone())
                .collect();
            for source in dataset.sample_negative_refs(id, &pool, negatives_per_topic, rng)? {
                train.push(ExampleRef {
                    topic: t,
                    source,
                    rating: Some(0.0),
                    negative: true,
                });
            }
        }
    }
    let mut test = Vec::new();
    for id in &split.test_topics {
        let t = dataset.topic_index(id)?;
        for (index, c) in dataset.candidates_at(t).iter().enumerate() {
            test.push(ExampleRef {
                topic: t,
                source: CandidateRef { topic: t, index },
                rating: c.rating,
                negative: false,
            });
        }
    }
    Ok(FoldExamples { train, test })
}

/// Fails if any training pair touches a test topic, either as the scored
/// topic or as the source of a negative image.
pub fn check_no_leakage(dataset: &Dataset, split: &FoldSplit, examples: &FoldExamples) -> Result<()> {
    let test: BTreeSet<usize> = split
        .test_topics
        .iter()
        .map(|id| dataset.topic_index(id))
        .collect::<Result<_>>()?;
    let train: BTreeSet<usize> = split
        .train_topics
        .iter()
        .map(|id| dataset.topic_index(id))
        .collect::<Result<_>>()?;
    if let Some(t) = test.intersection(&train).next() {
        return Err(Error::Validation(format!(
            "fold {}: topic {} is in both train and test",
            split.fold_index, dataset.topics[*t].id
        )));
    }
    for ex in &examples.train {
        if test.contains(&ex.topic) || test.contains(&ex.source.topic) {
            return Err(Error::Validation(format!(
                "fold {}: training example for topic {} uses image {} from test topic {}",
                split.fold_index,
                dataset.topics[ex.topic].id,
                dataset.candidate(ex.source).image_id,
                dataset.topics[ex.source.topic].id,
            )));
        }
    }
    for ex in &examples.test {
        if !test.contains(&ex.topic) || ex.negative {
            return Err(Error::Validation(format!(
                "fold {}: unexpected test example for topic {}",
                split.fold_index, dataset.topics[ex.topic].id
            )));
        }
    }
    Ok(())
}
