//! Review ingestion, text normalization, vocabulary selection and the
//! integer-indexed bag-of-words corpus.

mod ingest;
mod io;
mod split;
mod text;
mod vocab;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Axis;

pub use ingest::{ingest_path, ingest_reviews, Ingested, InputFormat, RawReview};
pub use split::{split_all_but_one, split_rating, SplitRatios, SplitSpec};
pub use text::{normalize_text, Normalizer, Stopwords, DEFAULT_MAX_TOKENS};
pub use vocab::{select_vocabulary, vocabulary_scores, VocabScoring, Vocabulary};

/// Word counts of one review, sorted by word index, every count positive.
pub type WordCounts = Vec<(usize, u32)>;

/// One surviving review.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub user: usize,
    pub product: usize,
    pub rating: f64,
    pub counts: WordCounts,
}

impl Entry {
    pub fn total_tokens(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c as u64).sum()
    }
}

/// Bag-of-words view of a review collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    users: Vec<String>,
    products: Vec<String>,
    vocab: Vocabulary,
    entries: Vec<Entry>,
}

/// Minimum number of in-vocabulary tokens for a review to be kept.
pub const MIN_REVIEW_TOKENS: u64 = 2;

impl Corpus {
    /// Assembles a corpus, checking every index and count.
    pub fn new(
        users: Vec<String>,
        products: Vec<String>,
        vocab: Vocabulary,
        entries: Vec<Entry>,
    ) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.user >= users.len() || e.product >= products.len() {
                return Err(Error::Corpus(format!(
                    "entry {i}: user or product index out of range"
                )));
            }
            if !e.rating.is_finite() {
                return Err(Error::Corpus(format!("entry {i}: non-finite rating")));
            }
            let mut prev = None;
            for &(w, c) in &e.counts {
                if w >= vocab.len() || c == 0 || prev.is_some_and(|p| p >= w) {
                    return Err(Error::Corpus(format!("entry {i}: invalid word counts")));
                }
                prev = Some(w);
            }
            if e.total_tokens() < MIN_REVIEW_TOKENS {
                return Err(Error::Corpus(format!(
                    "entry {i}: fewer than {MIN_REVIEW_TOKENS} tokens"
                )));
            }
        }
        Ok(Self {
            users,
            products,
            vocab,
            entries,
        })
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_products(&self) -> usize {
        self.products.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.entries.iter().map(Entry::total_tokens).sum()
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.iter().position(|u| u == id)
    }

    pub fn product_index(&self, id: &str) -> Option<usize> {
        self.products.iter().position(|p| p == id)
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            reviews: self.len(),
            users: self.num_users(),
            items: self.num_products(),
            vocabulary: self.vocab_size(),
            tokens: self.total_tokens(),
        }
    }
}

/// Collection-level counts of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub reviews: usize,
    pub users: usize,
    pub items: usize,
    pub vocabulary: usize,
    pub tokens: u64,
}

fn count_tokens(tokens: &[String], vocab: &Vocabulary) -> WordCounts {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for t in tokens {
        if let Some(w) = vocab.get(t) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts.into_iter().collect()
}

/// Builds a corpus from already normalized token lists.
///
/// `docs[i]` holds the tokens of `reviews[i]`. Out-of-vocabulary tokens are
/// discarded, then reviews with fewer than two remaining tokens are dropped.
/// User and product lists keep first-appearance order over surviving reviews.
pub fn build_corpus_from_tokens(
    reviews: &[RawReview],
    docs: &[Vec<String>],
    vocab: &Vocabulary,
) -> Result<Corpus> {
    if reviews.len() != docs.len() {
        return Err(Error::Dimension(format!(
            "{} reviews but {} token lists",
            reviews.len(),
            docs.len()
        )));
    }
    let mut users: Vec<String> = Vec::new();
    let mut products: Vec<String> = Vec::new();
    let mut user_ix: HashMap<&str, usize> = HashMap::new();
    let mut product_ix: HashMap<&str, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (review, tokens) in reviews.iter().zip(docs) {
        let counts = count_tokens(tokens, vocab);
        let total: u64 = counts.iter().map(|&(_, c)| c as u64).sum();
        if total < MIN_REVIEW_TOKENS {
            continue;
        }
        let user = *user_ix.entry(review.user_id.as_str()).or_insert_with(|| {
            users.push(review.user_id.clone());
            users.len() - 1
        });
        let product = *product_ix
            .entry(review.product_id.as_str())
            .or_insert_with(|| {
                products.push(review.product_id.clone());
                products.len() - 1
            });
        entries.push(Entry {
            user,
            product,
            rating: review.rating,
            counts,
        });
    }
    if entries.is_empty() {
        return Err(Error::Corpus(
            "no review kept at least two vocabulary words".into(),
        ));
    }
    Corpus::new(users, products, vocab.clone(), entries)
}

/// Normalizes review texts and builds the corpus over `vocab`.
pub fn build_corpus(
    reviews: &[RawReview],
    vocab: &Vocabulary,
    normalizer: &Normalizer,
) -> Result<Corpus> {
    let docs: Vec<Vec<String>> = reviews
        .iter()
        .map(|r| normalizer.normalize(&r.text))
        .collect();
    build_corpus_from_tokens(reviews, &docs, vocab)
}

/// Full preprocessing: normalize, select `vocab_size` words, build the corpus.
pub fn preprocess(
    reviews: &[RawReview],
    normalizer: &Normalizer,
    vocab_size: usize,
    scoring: VocabScoring,
) -> Result<Corpus> {
    let docs: Vec<Vec<String>> = reviews
        .iter()
        .map(|r| normalizer.normalize(&r.text))
        .collect();
    let vocab = select_vocabulary(&docs, vocab_size, scoring)?;
    build_corpus_from_tokens(reviews, &docs, &vocab)
}

/// Aggregated word counts of one user or product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermFrequencyVector {
    pub owner: usize,
    pub counts: Vec<(usize, u64)>,
}

impl TermFrequencyVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// Dense copy of length `dim`.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &(w, c) in &self.counts {
            v[w] = c as f64;
        }
        v
    }
}

/// Per-user or per-product term frequencies over the given entries.
///
/// One vector per user (or product) of the corpus, in index order; owners
/// without tokens among `entries` get an empty vector.
pub fn term_frequency_vectors_over(
    corpus: &Corpus,
    entries: &[usize],
    axis: Axis,
) -> Vec<TermFrequencyVector> {
    let owners = match axis {
        Axis::User => corpus.num_users(),
        Axis::Product => corpus.num_products(),
    };
    let mut acc: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); owners];
    for &i in entries {
        let e = &corpus.entries[i];
        let owner = match axis {
            Axis::User => e.user,
            Axis::Product => e.product,
        };
        for &(w, c) in &e.counts {
            *acc[owner].entry(w).or_insert(0) += c as u64;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(owner, m)| TermFrequencyVector {
            owner,
            counts: m.into_iter().collect(),
        })
        .collect()
}

/// Term frequencies over every entry of the corpus.
pub fn term_frequency_vectors(corpus: &Corpus, axis: Axis) -> Vec<TermFrequencyVector> {
    let all: Vec<usize> = (0..corpus.len()).collect();
    term_frequency_vectors_over(corpus, &all, axis)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn review(u: &str, p: &str, rating: f64, text: &str) -> RawReview {
        RawReview {
            user_id: u.into(),
            product_id: p.into(),
            rating,
            text: text.into(),
        }
    }

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::new(words.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn counts_in_vocabulary_words() {
        let reviews = [review("u", "p", 5.0, "wax wax kit")];
        let c = build_corpus(&reviews, &vocab(&["wax", "kit"]), &Normalizer::default()).unwrap();
        assert_eq!(c.entries()[0].counts, vec![(0, 2), (1, 1)]);
    }

    #[test]
    fn drops_reviews_below_two_tokens() {
        let reviews = [
            review("u1", "p1", 5.0, "zzz"),
            review("u2", "p2", 4.0, "wax"),
            review("u3", "p3", 3.0, "wax kit"),
        ];
        let c = build_corpus(&reviews, &vocab(&["wax", "kit"]), &Normalizer::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.users(), ["u3"]);
        assert_eq!(c.products(), ["p3"]);
    }

    #[test]
    fn empty_result_is_error() {
        let reviews = [review("u1", "p1", 5.0, "zzz")];
        assert!(matches!(
            build_corpus(&reviews, &vocab(&["wax"]), &Normalizer::default()),
            Err(Error::Corpus(_))
        ));
    }

    #[test]
    fn user_vector_sums_reviews() {
        let v = vocab(&["wax", "kit", "car"]);
        let reviews = [
            review("u", "p1", 5.0, "wax wax"),
            review("u", "p2", 4.0, "kit car"),
            review("w", "p1", 1.0, "car car car"),
        ];
        let c = build_corpus(&reviews, &v, &Normalizer::default()).unwrap();
        let users = term_frequency_vectors(&c, Axis::User);
        assert_eq!(users[0].counts, vec![(0, 2), (1, 1), (2, 1)]);
        let products = term_frequency_vectors(&c, Axis::Product);
        assert_eq!(products.len(), 2);
        let total: u64 = users.iter().map(TermFrequencyVector::total).sum();
        let total_p: u64 = products.iter().map(TermFrequencyVector::total).sum();
        assert_eq!(total, c.total_tokens());
        assert_eq!(total_p, c.total_tokens());
    }

    #[test]
    fn preprocess_end_to_end() {
        let reviews = [
            review(
                "u1",
                "p1",
                5.0,
                "The strings sound bright and the strings last",
            ),
            review("u2", "p1", 3.0, "Strings broke after a week, cheap strings"),
            review("u1", "p2", 4.0, "Good pedal, noisy pedal"),
        ];
        let c = preprocess(&reviews, &Normalizer::default(), 50, VocabScoring::TfIdf).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.vocab().get("the").is_none());
        assert!(c.vocab().get("strings").is_some());
    }

    #[test]
    fn rejects_bad_entries() {
        let v = vocab(&["a", "b"]);
        let bad = Entry {
            user: 0,
            product: 0,
            rating: 3.0,
            counts: vec![(1, 1), (0, 1)],
        };
        assert!(Corpus::new(vec!["u".into()], vec!["p".into()], v.clone(), vec![bad]).is_err());
        let short = Entry {
            user: 0,
            product: 0,
            rating: 3.0,
            counts: vec![(0, 1)],
        };
        assert!(Corpus::new(vec!["u".into()], vec!["p".into()], v, vec![short]).is_err());
    }
}
