//! Top-1 average rating and nDCG@k over per-topic rankings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

/// How a gold rating turns into gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Gain {
    /// `rel / log2(i + 1)`
    #[default]
    Linear,
    /// `(2^rel - 1) / log2(i + 1)`
    Exponential,
}

impl Gain {
    fn apply(self, rel: f64) -> f64 {
        match self {
            Gain::Linear => rel,
            Gain::Exponential => libm::exp2(rel) - 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gain::Linear => "linear",
            Gain::Exponential => "exponential",
        }
    }
}

impl core::str::FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Gain::Linear),
            "exponential" | "exp" => Ok(Gain::Exponential),
            _ => Err(Error::arg(format!("unknown gain '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub image_id: String,
    pub gold: Option<f64>,
}

/// A topic's candidates in predicted order, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub topic_id: String,
    pub items: Vec<RankedItem>,
}

/// Descending by score, ties by ascending image id. NaN scores sort last.
pub fn compare_scored(a: (&str, f64), b: (&str, f64)) -> Ordering {
    let by_score = match (a.1.is_nan(), b.1.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal),
    };
    by_score.then_with(|| a.0.cmp(b.0))
}

impl RankedList {
    /// Orders `(image_id, score, gold)` triples by predicted score.
    pub fn from_scores(
        topic_id: impl Into<String>,
        mut scored: Vec<(String, f64, Option<f64>)>,
    ) -> Self {
        scored.sort_by(|a, b| compare_scored((&a.0, a.1), (&b.0, b.1)));
        Self {
            topic_id: topic_id.into(),
            items: scored
                .into_iter()
                .map(|(image_id, _, gold)| RankedItem { image_id, gold })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn image_ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.image_id.as_str()).collect()
    }

    /// Gold ratings in predicted order.
    pub fn gold_ratings(&self) -> Result<Vec<f64>> {
        self.items
            .iter()
            .map(|i| {
                i.gold.ok_or_else(|| Error::MissingRating {
                    topic_id: self.topic_id.clone(),
                    image_id: i.image_id.clone(),
                })
            })
            .collect()
    }

    /// Gold ratings sorted into the ideal (descending) order, ties by image id.
    pub fn ideal_ratings(&self) -> Result<Vec<f64>> {
        let mut pairs: Vec<(&str, f64)> = self
            .items
            .iter()
            .map(|i| i.image_id.as_str())
            .zip(self.gold_ratings()?)
            .collect();
        pairs.sort_by(|a, b| compare_scored(*a, *b));
        Ok(pairs.into_iter().map(|p| p.1).collect())
    }
}

pub fn dcg_at_k(ratings: &[f64], k: usize, gain: Gain) -> f64 {
    ratings
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &rel)| gain.apply(rel) / libm::log2(i as f64 + 2.0))
        .sum()
}

/// DCG of the predicted order over DCG of the ideal order; 1.0 when nothing
/// is relevant.
pub fn ndcg_at_k(ranked: &RankedList, k: usize, gain: Gain) -> Result<f64> {
    if k == 0 {
        return Err(Error::arg("nDCG cutoff must be >= 1"));
    }
    if ranked.is_empty() {
        return Err(Error::arg(format!("empty ranking for topic {}", ranked.topic_id)));
    }
    let ideal = dcg_at_k(&ranked.ideal_ratings()?, k, gain);
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg_at_k(&ranked.gold_ratings()?, k, gain) / ideal)
}

/// Mean gold rating of the first item of each list.
pub fn top1_average_rating(lists: &[RankedList]) -> Result<f64> {
    if lists.is_empty() {
        return Err(Error::arg("no rankings to average"));
    }
    let mut sum = 0.0;
    for list in lists {
        sum += top1_rating(list)?;
    }
    Ok(sum / lists.len() as f64)
}

pub fn top1_rating(list: &RankedList) -> Result<f64> {
    let first = list
        .items
        .first()
        .ok_or_else(|| Error::arg(format!("empty ranking for topic {}", list.topic_id)))?;
    first.gold.ok_or_else(|| Error::MissingRating {
        topic_id: list.topic_id.clone(),
        image_id: first.image_id.clone(),
    })
}

pub fn mean_ndcg_at_k(lists: &[RankedList], k: usize, gain: Gain) -> Result<f64> {
    if lists.is_empty() {
        return Err(Error::arg("no rankings to average"));
    }
    let mut sum = 0.0;
    for list in lists {
        sum += ndcg_at_k(list, k, gain)?;
    }
    Ok(sum / lists.len() as f64)
}
