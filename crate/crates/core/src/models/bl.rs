use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Review, ReviewSet};
use crate::embeddings::{training_tokens, FeatureValues, FeatureVector, Scheme};
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 100;

/// The K unigrams used by the keyword baseline, in rank order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabFile", into = "VocabFile")]
pub struct UnigramVocab {
    words: Vec<String>,
    k: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    k: usize,
    words: Vec<String>,
}

impl From<VocabFile> for UnigramVocab {
    fn from(f: VocabFile) -> Self {
        UnigramVocab::from_ranked(f.words, f.k)
    }
}

impl From<UnigramVocab> for VocabFile {
    fn from(v: UnigramVocab) -> Self {
        VocabFile { k: v.k, words: v.words }
    }
}

impl UnigramVocab {
    /// Keeps the first occurrence of each word, then truncates to `k`.
    pub fn from_ranked(words: Vec<String>, k: usize) -> UnigramVocab {
        let mut index = HashMap::new();
        let mut kept = Vec::new();
        for w in words {
            if kept.len() == k {
                break;
            }
            if !index.contains_key(&w) {
                index.insert(w.clone(), kept.len());
                kept.push(w);
            }
        }
        UnigramVocab { words: kept, k, index }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Total occurrences of every unigram over the review texts.
pub fn unigram_counts(train: &ReviewSet) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for r in train {
        for t in training_tokens(&r.text) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    counts
}

/// Ranks unigrams by `score(word, count)` descending, ties broken
/// lexicographically, and keeps the top `k`.
pub fn select_unigrams_by<F>(train: &ReviewSet, k: usize, score: F) -> Result<UnigramVocab>
where
    F: Fn(&str, u64) -> f64,
{
    if k == 0 {
        return Err(Error::InvalidInput("unigram vocabulary size must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut scored: Vec<(f64, String)> = unigram_counts(train)
        .into_iter()
        .map(|(w, c)| (score(&w, c), w))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(UnigramVocab::from_ranked(
        scored.into_iter().map(|(_, w)| w).collect(),
        k,
    ))
}

pub fn select_top_k_unigrams(train: &ReviewSet, k: usize) -> Result<UnigramVocab> {
    select_unigrams_by(train, k, |_, c| c as f64)
}

/// Token-level counts of each vocabulary word in the review.
pub fn bl_featurize_tokens<S: AsRef<str>>(tokens: &[S], vocab: &UnigramVocab) -> FeatureVector {
    let mut counts = vec![0u32; vocab.len()];
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            counts[i] += 1;
        }
    }
    let entries = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, f64::from(c)))
        .collect();
    FeatureVector {
        scheme: Scheme::Bl,
        dim: vocab.len(),
        values: FeatureValues::Sparse(entries),
    }
}

pub fn bl_featurize(review: &Review, vocab: &UnigramVocab) -> FeatureVector {
    bl_featurize_tokens(&training_tokens(&review.text), vocab)
}
