use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of distinct words and its inverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::InvalidArgument("empty vocabulary word".into()));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary word {w:?}"
                )));
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// How candidate words are ranked for the vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabScoring {
    /// Total corpus frequency times `ln(R / document frequency)`.
    #[default]
    TfIdf,
    /// Total corpus frequency.
    Frequency,
}

/// Scores every distinct token over a collection of tokenized documents.
///
/// Returned in lexicographic token order.
pub fn vocabulary_scores(docs: &[Vec<String>], scoring: VocabScoring) -> Vec<(String, f64)> {
    let mut stats: HashMap<&str, (u64, u64)> = HashMap::new();
    for doc in docs {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for tok in doc {
            let entry = stats.entry(tok.as_str()).or_insert((0, 0));
            entry.0 += 1;
            if seen.insert(tok.as_str(), ()).is_none() {
                entry.1 += 1;
            }
        }
    }
    let n_docs = docs.len() as f64;
    let mut scores: Vec<(String, f64)> = stats
        .into_iter()
        .map(|(tok, (tf, df))| {
            let score = match scoring {
                VocabScoring::TfIdf => tf as f64 * (n_docs / df as f64).ln(),
                VocabScoring::Frequency => tf as f64,
            };
            (tok.to_string(), score)
        })
        .collect();
    scores.sort_by(|a, b| a.0.cmp(&b.0));
    scores
}

/// Keeps the `size` highest-scoring tokens, ties broken lexicographically.
///
/// If fewer than `size` distinct tokens exist, all of them are kept and a
/// warning is logged.
pub fn select_vocabulary(
    docs: &[Vec<String>],
    size: usize,
    scoring: VocabScoring,
) -> Result<Vocabulary> {
    let mut scores = vocabulary_scores(docs, scoring);
    if scores.len() < size {
        log::warn!(
            "only {} distinct tokens available, fewer than the requested vocabulary size {}",
            scores.len(),
            size
        );
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores.truncate(size);
    Vocabulary::new(scores.into_iter().map(|(w, _)| w).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn toy_tfidf_ranking() {
        // a: tf 3, df 2 -> 3 ln(3/2); b: tf 1, df 1 -> ln 3; c: tf 2, df 2 -> 2 ln(3/2)
        let d = docs(&[&["a", "a", "b"], &["a", "c"], &["c"]]);
        let scores = vocabulary_scores(&d, VocabScoring::TfIdf);
        let expect = [
            1.216_395_324_324_493,
            1.098_612_288_668_11,
            0.810_930_216_216_329,
        ];
        for ((_, s), e) in scores.iter().zip(expect) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
        let v = select_vocabulary(&d, 2, VocabScoring::TfIdf).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
    }

    #[test]
    fn identical_documents_tie_lexicographically() {
        let d = docs(&[&["zeta", "alpha", "mid"], &["zeta", "alpha", "mid"]]);
        let v = select_vocabulary(&d, 3, VocabScoring::TfIdf).unwrap();
        assert_eq!(v.words(), ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn short_collection_keeps_everything() {
        let d = docs(&[&["a", "b"], &["b"]]);
        let v = select_vocabulary(&d, 10, VocabScoring::TfIdf).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.get("a"), Some(0));
    }

    #[test]
    fn index_is_inverse() {
        let v = Vocabulary::new(vec!["x".into(), "y".into()]).unwrap();
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.get(w), Some(i));
        }
        assert!(Vocabulary::new(vec!["x".into(), "x".into()]).is_err());
    }
}
