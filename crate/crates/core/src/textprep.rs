//! Tokenization and normalization of motivation statements.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_DUTCH: &str = include_str!("../data/stopwords_nl.txt");

/// Shortest token kept by [`normalize`], in characters.
pub const MIN_TOKEN_CHARS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: BTreeSet<String>,
    pub source_name: String,
}

impl StopwordList {
    /// Parses one word per line; `#` starts a comment.
    pub fn parse(text: &str, source_name: impl Into<String>) -> StopwordList {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopwordList {
            words,
            source_name: source_name.into(),
        }
    }

    pub fn bundled_dutch() -> StopwordList {
        Self::parse(BUNDLED_DUTCH, "bundled:nl")
    }

    pub fn empty() -> StopwordList {
        StopwordList {
            words: BTreeSet::new(),
            source_name: "none".into(),
        }
    }

    pub fn load(path: &Path) -> Result<StopwordList> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, path.display().to_string()))
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

impl<S: Into<String>> FromIterator<S> for StopwordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopwordList {
            words: iter.into_iter().map(|w| w.into().to_lowercase()).collect(),
            source_name: "inline".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub record_id: String,
    /// Normalized tokens (lowercase, digit-free, stopwords removed).
    pub tokens: Vec<String>,
    /// Lowercased, digit-filtered tokens before stopword removal. Dictionary
    /// features are computed from this stream.
    pub unfiltered: Vec<String>,
    pub raw_sentence_count: usize,
}

impl TokenizedDoc {
    pub fn from_text(record_id: impl Into<String>, text: &str, stopwords: &StopwordList) -> TokenizedDoc {
        let (raw, sentences) = tokenize(text);
        let unfiltered = normalize(&raw, &StopwordList::empty());
        let tokens = unfiltered.iter().filter(|t| !stopwords.contains(t)).cloned().collect();
        TokenizedDoc {
            record_id: record_id.into(),
            tokens,
            unfiltered,
            raw_sentence_count: sentences,
        }
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// Splits text into alphanumeric runs, keeping hyphens and apostrophes that
/// sit between two word characters. Also counts sentences: segments
/// containing a word and ending in `.`, `!` or `?`, at least one for text
/// with any word characters.
pub fn tokenize(text: &str) -> (Vec<String>, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut sentences = 0;
    let mut segment_has_word = false;
    let mut any_word = false;

    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.push(c);
            segment_has_word = true;
            any_word = true;
            continue;
        }
        let inner_joiner = is_joiner(c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if inner_joiner {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if matches!(c, '.' | '!' | '?') && segment_has_word {
            sentences += 1;
            segment_has_word = false;
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if any_word {
        sentences = sentences.max(1);
    }
    (tokens, sentences)
}

/// Lowercases, then drops tokens with digits, tokens shorter than
/// [`MIN_TOKEN_CHARS`] and stopwords. Order is preserved.
pub fn normalize<S: AsRef<str>>(raw: &[S], stopwords: &StopwordList) -> Vec<String> {
    raw.iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !t.chars().any(|c| c.is_numeric()))
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS)
        .filter(|t| !stopwords.contains(t))
        .collect()
}
