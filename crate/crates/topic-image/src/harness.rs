//! Cross-validated training and evaluation of every labeling method.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topic_image_core::baselines::{local_ppr_rank, train_linear, GlobalPprIndex};
use topic_image_core::dataset::{
    build_fold_examples, check_no_leakage, kfold_split, Dataset, ExampleRef, FoldSplit,
};
use topic_image_core::embeddings::{tokenize, EmbeddingTable};
use topic_image_core::features::{build_input, FeatureConfig, FeatureDims};
use topic_image_core::metrics::{mean_ndcg_at_k, top1_average_rating, top1_rating, Gain, RankedList};
use topic_image_core::neuralnet::{init_model, train, TrainConfig};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{load_dataset, load_embeddings, DatasetPaths};
use crate::model_file::ModelFile;
use crate::stats::{paired_t_test, PairedTTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dnn(FeatureConfig),
    Linear,
    LocalPpr,
    GlobalPpr,
    Random,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::GlobalPpr,
        Method::LocalPpr,
        Method::Linear,
        Method::Random,
        Method::Dnn(FeatureConfig::TOPIC_CAPTION),
        Method::Dnn(FeatureConfig::TOPIC_VISUAL),
        Method::Dnn(FeatureConfig::FULL),
    ];

    /// Human-readable row label.
    pub fn label(&self) -> String {
        match self {
            Method::Dnn(f) => format!("DNN ({})", feature_label(*f)),
            Method::Linear => "LR (Topic+Caption+VGG)".into(),
            Method::LocalPpr => "Local PPR".into(),
            Method::GlobalPpr => "Global PPR".into(),
            Method::Random => "Random".into(),
        }
    }
}

fn feature_label(f: FeatureConfig) -> &'static str {
    match (f.use_caption, f.use_visual) {
        (true, true) => "Topic+Caption+VGG",
        (true, false) => "Topic+Caption",
        (false, true) => "Topic+VGG",
        (false, false) => "Topic",
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Dnn(c) => write!(f, "dnn-{c}"),
            Method::Linear => f.write_str("linear"),
            Method::LocalPpr => f.write_str("local-ppr"),
            Method::GlobalPpr => f.write_str("global-ppr"),
            Method::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(Method::Linear),
            "local-ppr" => Ok(Method::LocalPpr),
            "global-ppr" => Ok(Method::GlobalPpr),
            "random" => Ok(Method::Random),
            other => match other.strip_prefix("dnn-") {
                Some(f) => Ok(Method::Dnn(f.parse()?)),
                None if other == "dnn" => Ok(Method::Dnn(FeatureConfig::FULL)),
                None => Err(Error::Config(format!("unknown method '{other}'"))),
            },
        }
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for m in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub top1: f64,
    pub ndcg1: f64,
    pub ndcg3: f64,
    pub ndcg5: f64,
}

impl Scores {
    pub fn from_rankings(lists: &[RankedList], gain: Gain) -> Result<Self> {
        Ok(Self {
            top1: top1_average_rating(lists)?,
            ndcg1: mean_ndcg_at_k(lists, 1, gain)?,
            ndcg3: mean_ndcg_at_k(lists, 3, gain)?,
            ndcg5: mean_ndcg_at_k(lists, 5, gain)?,
        })
    }

    fn mean(all: &[Scores]) -> Self {
        let n = all.len() as f64;
        let sum = |f: fn(&Scores) -> f64| all.iter().map(f).sum::<f64>() / n;
        Self {
            top1: sum(|s| s.top1),
            ndcg1: sum(|s| s.ndcg1),
            ndcg3: sum(|s| s.ndcg3),
            ndcg5: sum(|s| s.ndcg5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold_index: usize,
    pub train_topics: usize,
    pub test_topics: usize,
    pub train_examples: usize,
    pub negative_examples: usize,
    pub test_examples: usize,
    pub scores: Vec<(Method, Scores)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Significance {
    pub a: Method,
    pub b: Method,
    pub test: PairedTTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub version: String,
    pub seed: u64,
    pub fingerprint: String,
    pub gain: Gain,
    pub methods: Vec<Method>,
    pub folds: Vec<FoldReport>,
    /// Mean over folds.
    pub aggregate: Vec<(Method, Scores)>,
    /// Top-1 gold rating per test topic, keyed by topic id.
    pub per_topic_top1: BTreeMap<Method, BTreeMap<String, f64>>,
    pub significance: Vec<Significance>,
}

impl EvaluationReport {
    pub fn scores(&self, method: Method) -> Option<Scores> {
        self.aggregate.iter().find(|(m, _)| *m == method).map(|(_, s)| *s)
    }
}

/// Mean-pooled topic and caption vectors, computed once per dataset.
pub struct FeatureCache<'a> {
    dataset: &'a Dataset,
    dims: FeatureDims,
    topics: Vec<Vec<f64>>,
    captions: Vec<Vec<Vec<f64>>>,
}

impl<'a> FeatureCache<'a> {
    pub fn new(dataset: &'a Dataset, table: &EmbeddingTable, dims: FeatureDims) -> Result<Self> {
        if table.dimension() != dims.text {
            return Err(Error::Config(format!(
                "embedding dimension {} does not match configured text dimension {}",
                table.dimension(),
                dims.text
            )));
        }
        let mut oov_topics = 0;
        let topics = dataset
            .topics()
            .iter()
            .map(|t| {
                let p = table.mean_pool(&t.terms)?;
                if p.found == 0 {
                    oov_topics += 1;
                }
                Ok(p.vector)
            })
            .collect::<Result<Vec<_>>>()?;
        if oov_topics > 0 {
            warn!("{oov_topics} topics have no in-vocabulary terms; using zero vectors");
        }
        let captions = (0..dataset.topics().len())
            .map(|t| {
                dataset
                    .candidates_at(t)
                    .iter()
                    .map(|c| table.mean_pool_or_zero(&c.caption_tokens).vector)
                    .collect()
            })
            .collect();
        Ok(Self {
            dataset,
            dims,
            topics,
            captions,
        })
    }

    pub fn input(&self, ex: &ExampleRef, features: FeatureConfig) -> Result<Vec<f64>> {
        let caption = features.use_caption.then(|| self.captions[ex.source.topic][ex.source.index].as_slice());
        let visual = features
            .use_visual
            .then(|| self.dataset.candidate(ex.source).visual.as_slice());
        Ok(build_input(&self.topics[ex.topic], caption, visual, features, self.dims)?.values)
    }
}

/// Fraction of topic terms and caption tokens found in the table.
pub fn vocabulary_coverage(dataset: &Dataset, table: &EmbeddingTable) -> f64 {
    let mut found = 0usize;
    let mut total = 0usize;
    for (t, topic) in dataset.topics().iter().enumerate() {
        let caption_tokens = dataset.candidates_at(t).iter().flat_map(|c| &c.caption_tokens);
        for tok in topic.terms.iter().chain(caption_tokens) {
            total += 1;
            found += usize::from(table.lookup(tok).is_some());
        }
    }
    if total == 0 {
        0.0
    } else {
        found as f64 / total as f64
    }
}

pub fn load_inputs(config: &RunConfig) -> Result<(Dataset, EmbeddingTable)> {
    let dataset = load_dataset(
        &DatasetPaths {
            topics: config.require("topics")?,
            candidates: config.require("candidates")?,
            visuals: config.require("visuals")?,
        },
        config.dataset_options(),
    )?;
    let table = load_embeddings(config.require("embeddings")?, config.dims.text)?;
    Ok((dataset, table))
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fold_rng(seed: u64, purpose: u64, fold: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, (purpose * 1000).wrapping_add(fold as u64)))
}

/// Groups test pairs by topic and orders each group by score.
fn rank_by_scores(dataset: &Dataset, test: &[ExampleRef], scores: &[f64]) -> Vec<RankedList> {
    let mut groups: Vec<(usize, Vec<(String, f64, Option<f64>)>)> = Vec::new();
    for (ex, &s) in test.iter().zip(scores) {
        let c = dataset.candidate(ex.source);
        match groups.last_mut() {
            Some((t, items)) if *t == ex.topic => items.push((c.image_id.clone(), s, ex.rating)),
            _ => groups.push((ex.topic, vec![(c.image_id.clone(), s, ex.rating)])),
        }
    }
    groups
        .into_iter()
        .map(|(t, items)| RankedList::from_scores(dataset.topics()[t].id.clone(), items))
        .collect()
}

/// Trains the network on the given pairs, returning the fitted model.
fn fit_dnn(
    cache: &FeatureCache<'_>,
    train_refs: &[ExampleRef],
    features: FeatureConfig,
    train_config: &TrainConfig,
    init_seed: u64,
) -> Result<topic_image_core::neuralnet::MlpModel> {
    let examples = train_refs
        .iter()
        .map(|ex| Ok((cache.input(ex, features)?, ex.rating.expect("training pairs are rated"))))
        .collect::<Result<Vec<_>>>()?;
    let mut model = init_model(features.input_dim(cache.dims), init_seed)?;
    let history = train(&mut model, &examples, train_config)?;
    info!(
        "  {} trained on {} pairs, final epoch MAE {:.4}",
        Method::Dnn(features),
        examples.len(),
        history.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

struct FoldContext<'a> {
    config: &'a RunConfig,
    dataset: &'a Dataset,
    table: &'a EmbeddingTable,
    cache: &'a FeatureCache<'a>,
    split: &'a FoldSplit,
    train: &'a [ExampleRef],
    test: &'a [ExampleRef],
}

impl FoldContext<'_> {
    /// Contiguous runs of test pairs sharing a topic.
    fn topic_groups(&self) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut groups = Vec::new();
        let mut start = 0;
        while start < self.test.len() {
            let t = self.test[start].topic;
            let end = start + self.test[start..].iter().take_while(|e| e.topic == t).count();
            groups.push((t, start..end));
            start = end;
        }
        groups
    }

    fn rank(&self, method: Method) -> Result<Vec<RankedList>> {
        let fold = self.split.fold_index;
        let seed = self.config.seed;
        match method {
            Method::Dnn(features) => {
                let train_config = TrainConfig {
                    seed: derive_seed(seed, 3000 + fold as u64),
                    ..self.config.train
                };
                let model = fit_dnn(self.cache, self.train, features, &train_config, derive_seed(seed, 4000 + fold as u64))?;
                let inputs = self
                    .test
                    .iter()
                    .map(|ex| self.cache.input(ex, features))
                    .collect::<Result<Vec<_>>>()?;
                let scores = model.predict_batch(&inputs)?;
                Ok(rank_by_scores(self.dataset, self.test, &scores))
            }
            Method::Linear => {
                let features = FeatureConfig::FULL;
                let examples = self
                    .train
                    .iter()
                    .map(|ex| Ok((self.cache.input(ex, features)?, ex.rating.expect("rated"))))
                    .collect::<Result<Vec<_>>>()?;
                let model = train_linear(&examples, self.config.ridge_l2)?;
                let scores = self
                    .test
                    .iter()
                    .map(|ex| Ok(model.predict(&self.cache.input(ex, features)?)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(rank_by_scores(self.dataset, self.test, &scores))
            }
            Method::LocalPpr => self
                .topic_groups()
                .into_iter()
                .map(|(t, range)| {
                    let cands: Vec<_> = self.test[range]
                        .iter()
                        .map(|ex| self.dataset.candidate(ex.source).clone())
                        .collect();
                    Ok(local_ppr_rank(&self.dataset.topics()[t], &cands, self.table, &self.config.ppr)?)
                })
                .collect(),
            Method::GlobalPpr => {
                let pool: Vec<_> = self.test.iter().map(|ex| self.dataset.candidate(ex.source)).collect();
                let index = GlobalPprIndex::build(&pool, self.table, &self.config.ppr)?;
                self.topic_groups()
                    .into_iter()
                    .map(|(t, range)| {
                        let own: Vec<usize> = range.collect();
                        Ok(index.rank(&self.dataset.topics()[t], &own, self.table, &self.config.ppr)?)
                    })
                    .collect()
            }
            Method::Random => {
                let mut rng = fold_rng(seed, 5, fold);
                let scores: Vec<f64> = self.test.iter().map(|_| rng.random::<f64>()).collect();
                Ok(rank_by_scores(self.dataset, self.test, &scores))
            }
        }
    }
}

/// Builds the training and test pairs of every fold without training
/// anything. Used by `validate` and by protocol checks.
pub fn fold_examples(config: &RunConfig, dataset: &Dataset) -> Result<Vec<(FoldSplit, topic_image_core::dataset::FoldExamples)>> {
    let splits = kfold_split(&dataset.topic_ids(), config.folds, config.seed)?;
    splits
        .into_iter()
        .map(|split| {
            let mut rng = fold_rng(config.seed, 1, split.fold_index);
            let ex = build_fold_examples(dataset, &split, config.negatives_per_topic, &mut rng)?;
            check_no_leakage(dataset, &split, &ex)?;
            Ok((split, ex))
        })
        .collect()
}

pub fn run_cross_validation(
    config: &RunConfig,
    dataset: &Dataset,
    table: &EmbeddingTable,
    methods: &[Method],
) -> Result<EvaluationReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let coverage = vocabulary_coverage(dataset, table);
    if coverage == 0.0 {
        return Err(Error::Config("embeddings cover none of the topic or caption tokens".into()));
    }
    info!("vocabulary coverage {:.1}%", coverage * 100.0);
    let dims = FeatureDims {
        text: config.dims.text,
        visual: dataset.visual_dim(),
    };
    let cache = FeatureCache::new(dataset, table, dims)?;

    let mut folds = Vec::new();
    let mut per_topic: BTreeMap<Method, BTreeMap<String, f64>> = BTreeMap::new();
    for (split, mut examples) in fold_examples(config, dataset)? {
        let before = examples.test.len();
        examples.test.retain(|e| e.rating.is_some());
        if examples.test.len() < before {
            warn!(
                "fold {}: {} unrated test candidates left out of evaluation",
                split.fold_index,
                before - examples.test.len()
            );
        }
        info!(
            "fold {}: {} train topics, {} test topics, {} train pairs, {} test pairs",
            split.fold_index,
            split.train_topics.len(),
            split.test_topics.len(),
            examples.train.len(),
            examples.test.len()
        );
        let ctx = FoldContext {
            config,
            dataset,
            table,
            cache: &cache,
            split: &split,
            train: &examples.train,
            test: &examples.test,
        };
        let mut scores = Vec::new();
        for &method in methods {
            let lists = ctx.rank(method).map_err(|e| {
                Error::Config(format!("fold {} method {method}: {e}", split.fold_index))
            })?;
            let s = Scores::from_rankings(&lists, config.gain)?;
            let entry = per_topic.entry(method).or_default();
            for list in &lists {
                entry.insert(list.topic_id.clone(), top1_rating(list)?);
            }
            info!("  {:<28} top1 {:.4}  nDCG@1 {:.4}", method.label(), s.top1, s.ndcg1);
            scores.push((method, s));
        }
        folds.push(FoldReport {
            fold_index: split.fold_index,
            train_topics: split.train_topics.len(),
            test_topics: split.test_topics.len(),
            train_examples: examples.train.len(),
            negative_examples: examples.train.iter().filter(|e| e.negative).count(),
            test_examples: examples.test.len(),
            scores,
        });
    }

    let aggregate = methods
        .iter()
        .map(|&m| {
            let all: Vec<Scores> = folds
                .iter()
                .map(|f| f.scores.iter().find(|(x, _)| *x == m).expect("scored").1)
                .collect();
            (m, Scores::mean(&all))
        })
        .collect();

    let mut significance = Vec::new();
    for (i, &a) in methods.iter().enumerate() {
        for &b in &methods[i + 1..] {
            let ta: Vec<f64> = per_topic[&a].values().copied().collect();
            let tb: Vec<f64> = per_topic[&b].values().copied().collect();
            significance.push(Significance {
                a,
                b,
                test: paired_t_test(&ta, &tb),
            });
        }
    }

    Ok(EvaluationReport {
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        fingerprint: config.fingerprint(),
        gain: config.gain,
        methods: methods.to_vec(),
        folds,
        aggregate,
        per_topic_top1: per_topic,
        significance,
    })
}

/// Trains one network on every topic, with negatives drawn from all other
/// topics.
pub fn train_full(config: &RunConfig, dataset: &Dataset, table: &EmbeddingTable) -> Result<ModelFile> {
    config.validate()?;
    let dims = FeatureDims {
        text: config.dims.text,
        visual: dataset.visual_dim(),
    };
    let cache = FeatureCache::new(dataset, table, dims)?;
    let all = FoldSplit {
        fold_index: 0,
        train_topics: dataset.topic_ids(),
        test_topics: Vec::new(),
    };
    let mut rng = fold_rng(config.seed, 1, usize::MAX);
    let examples = build_fold_examples(dataset, &all, config.negatives_per_topic, &mut rng)?;
    let train_config = TrainConfig {
        seed: derive_seed(config.seed, 3000),
        ..config.train
    };
    let model = fit_dnn(&cache, &examples.train, config.features, &train_config, derive_seed(config.seed, 4000))?;
    Ok(ModelFile::new(model, config.features, dims, train_config))
}

/// Scores one (topic, image) pair with a saved model.
pub fn score_pair(
    model: &ModelFile,
    table: &EmbeddingTable,
    topic_terms: &[String],
    caption: &str,
    visual: Option<&[f64]>,
) -> Result<f64> {
    if table.dimension() != model.dims.text {
        return Err(Error::FeatureMismatch(format!(
            "embeddings have dimension {}, model expects {}",
            table.dimension(),
            model.dims.text
        )));
    }
    match (model.features.use_visual, visual) {
        (true, None) => {
            return Err(Error::FeatureMismatch(format!(
                "model uses {} features but no visual vector was given",
                model.features
            )))
        }
        (false, Some(_)) => {
            return Err(Error::FeatureMismatch(format!(
                "model uses {} features but a visual vector was given",
                model.features
            )))
        }
        _ => {}
    }
    if let Some(v) = visual {
        if v.len() != model.dims.visual {
            return Err(Error::FeatureMismatch(format!(
                "visual vector has {} components, model expects {}",
                v.len(),
                model.dims.visual
            )));
        }
    }
    let topic = table.mean_pool(topic_terms)?;
    let caption_vec = model
        .features
        .use_caption
        .then(|| table.mean_pool_or_zero(&tokenize(caption)).vector);
    let x = build_input(&topic.vector, caption_vec.as_deref(), visual, model.features, model.dims)?;
    Ok(model.model.predict(&x.values)?)
}
