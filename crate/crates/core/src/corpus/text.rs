use std::collections::HashSet;
use std::io::BufRead;

use crate::error::Result;

const ENGLISH: &str = include_str!("stopwords_en.txt");

/// Default cap on raw whitespace tokens considered per review.
pub const DEFAULT_MAX_TOKENS: usize = 300;

/// A set of words removed during normalization.
///
/// Entries are stored in normalized form (lowercase, alphabetic characters
/// only), so `don't` in a list file matches the normalized token `dont`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::from_words(ENGLISH.lines())
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .filter_map(|w| clean_token(w.as_ref().trim()))
            .collect();
        Self { words }
    }

    /// Reads one word per line; blank lines and `#` comments are ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            words.push(line.to_string());
        }
        Ok(Self::from_words(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lowercases a raw token and keeps its alphabetic characters only.
fn clean_token(raw: &str) -> Option<String> {
    let cleaned: String = raw
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if cleaned.is_empty() {
        None
    } else {
        Some(cleaned)
    }
}

/// Turns raw review text into a token list.
///
/// Only the first `max_tokens` whitespace-separated raw tokens are looked at.
/// Each is lowercased and stripped of digits and punctuation; tokens that end
/// up empty or in `stopwords` are dropped.
pub fn normalize_text(text: &str, stopwords: &Stopwords, max_tokens: usize) -> Vec<String> {
    text.split_whitespace()
        .take(max_tokens)
        .filter_map(clean_token)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Normalization settings bundled together.
#[derive(Debug, Clone)]
pub struct Normalizer {
    pub stopwords: Stopwords,
    pub max_tokens: usize,
}

impl Normalizer {
    pub fn new(stopwords: Stopwords, max_tokens: usize) -> Self {
        Self {
            stopwords,
            max_tokens,
        }
    }

    pub fn normalize(&self, text: &str) -> Vec<String> {
        normalize_text(text, &self.stopwords, self.max_tokens)
    }
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::new(Stopwords::english(), DEFAULT_MAX_TOKENS)
    }
}
