//! Word-vector lookup and mean pooling of token sequences.
//!
//! Tokens are lowercased on insert and on lookup. Out-of-vocabulary tokens
//! are skipped when pooling; when nothing is found the pooled vector is all
//! zeros and [`Pooled::found`] is 0 so callers can report it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

/// Result of [`EmbeddingTable::mean_pool`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub vector: Vec<f64>,
    /// Number of tokens that were found in the table.
    pub found: usize,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::arg("embedding dimension must be positive"));
        }
        Ok(Self {
            dimension,
            entries: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts a vector, returning `true` when it replaced an existing entry.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::dim(
                alloc::format!("embedding for token '{token}'"),
                self.dimension,
                vector.len(),
            ));
        }
        Ok(self.entries.insert(normalize(token), vector).is_some())
    }

    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        // Avoid an allocation for the common already-lowercase case.
        if token.chars().any(char::is_uppercase) {
            self.entries.get(&normalize(token)).map(Vec::as_slice)
        } else {
            self.entries.get(token).map(Vec::as_slice)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Component-wise mean over the in-vocabulary tokens.
    pub fn mean_pool<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Pooled> {
        if tokens.is_empty() {
            return Err(Error::arg("cannot mean-pool an empty token sequence"));
        }
        let mut vector = vec![0.0; self.dimension];
        let mut found = 0usize;
        for token in tokens {
            if let Some(v) = self.lookup(token.as_ref()) {
                for (acc, x) in vector.iter_mut().zip(v) {
                    *acc += x;
                }
                found += 1;
            }
        }
        if found > 0 {
            let n = found as f64;
            vector.iter_mut().for_each(|x| *x /= n);
        }
        Ok(Pooled { vector, found })
    }

    /// Like [`mean_pool`](Self::mean_pool) but an empty sequence yields the
    /// zero vector instead of an error. Used for captions, which may be blank.
    pub fn mean_pool_or_zero<S: AsRef<str>>(&self, tokens: &[S]) -> Pooled {
        if tokens.is_empty() {
            return Pooled {
                vector: vec![0.0; self.dimension],
                found: 0,
            };
        }
        self.mean_pool(tokens).expect("non-empty tokens")
    }
}

fn normalize(token: &str) -> String {
    token.to_lowercase()
}

/// Splits caption text on whitespace, trims punctuation from both ends of
/// each piece and lowercases it. Pieces that become empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|piece| piece.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|piece| !piece.is_empty())
        .map(normalize)
        .collect()
}
