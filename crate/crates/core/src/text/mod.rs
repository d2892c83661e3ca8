//! Tokens, normalization, and the line-oriented corpus format.
//!
//! A sentence is one line of a corpus file. Words are maximal runs of
//! alphanumeric characters; everything else (whitespace, punctuation,
//! apostrophes, hyphens) delimits. A word takes part in links only when it is
//! *lexical*: free of digits, long enough after normalization, and absent from
//! the stoplist.

mod document;
pub mod stoplist;

use std::collections::BTreeSet;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use document::{
    load_corpus, load_corpus_lenient, parse_document, CorpusDocument, CorpusFormat, Document, Heading, LoadedCorpus,
    Sentence, DEFAULT_GENRE,
};

/// Upper bound on re-stemming passes when driving a word to its fixed point.
const MAX_STEM_PASSES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub is_lexical: bool,
}

/// How surface words are folded into comparable items.
///
/// Stoplist entries are stored in normalized form under the same settings, so
/// a stoplist membership test can be made directly on a token's normalized
/// form. Changing `stem` or `case_fold` re-normalizes the stoplist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    stem: bool,
    case_fold: bool,
    min_token_len: usize,
    stoplist_source: Vec<String>,
    stoplist: BTreeSet<String>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self::new(stoplist::ENGLISH.iter().copied(), true, true, 2)
    }
}

impl NormalizationConfig {
    /// `min_token_len` is clamped to at least 1.
    pub fn new<I, S>(stoplist: I, stem: bool, case_fold: bool, min_token_len: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut config = NormalizationConfig {
            stem,
            case_fold,
            min_token_len: min_token_len.max(1),
            stoplist_source: stoplist
                .into_iter()
                .map(|s| s.as_ref().trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            stoplist: BTreeSet::new(),
        };
        config.rebuild_stoplist();
        config
    }

    /// Parses a stoplist file: one word per line, `#` starts a comment line.
    pub fn stoplist_from_str(text: &str) -> Vec<String> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }

    pub fn with_stoplist<I, S>(mut self, stoplist: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stoplist_source = stoplist
            .into_iter()
            .map(|s| s.as_ref().trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        self.rebuild_stoplist();
        self
    }

    pub fn with_stem(mut self, stem: bool) -> Self {
        self.stem = stem;
        self.rebuild_stoplist();
        self
    }

    pub fn with_case_fold(mut self, case_fold: bool) -> Self {
        self.case_fold = case_fold;
        self.rebuild_stoplist();
        self
    }

    pub fn with_min_token_len(mut self, min_token_len: usize) -> Self {
        self.min_token_len = min_token_len.max(1);
        self
    }

    pub fn stem(&self) -> bool {
        self.stem
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn min_token_len(&self) -> usize {
        self.min_token_len
    }

    /// Normalized stoplist entries.
    pub fn stoplist(&self) -> &BTreeSet<String> {
        &self.stoplist
    }

    pub fn is_stopword(&self, normalized: &str) -> bool {
        self.stoplist.contains(normalized)
    }

    /// Hex SHA-256 over the normalized stoplist, one entry per line.
    pub fn stoplist_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for word in &self.stoplist {
            hasher.update(word.as_bytes());
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }

    /// Case folding followed by stemming, with the stemmer driven to a fixed
    /// point so that normalizing a normalized form is the identity.
    pub fn normalize(&self, word: &str) -> String {
        let folded = if self.case_fold {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        if !self.stem || !folded.chars().all(char::is_alphabetic) {
            return folded;
        }
        let stemmer = Stemmer::create(Algorithm::English);
        let mut current = folded;
        for _ in 0..MAX_STEM_PASSES {
            let next = stemmer.stem(&current).into_owned();
            if next == current || next.is_empty() {
                break;
            }
            current = next;
        }
        current
    }

    fn rebuild_stoplist(&mut self) {
        let stoplist = self
            .stoplist_source
            .iter()
            .map(|w| self.normalize(w))
            .filter(|w| !w.is_empty())
            .collect();
        self.stoplist = stoplist;
    }
}

/// Splits `raw` into words and normalizes each one. Empty input yields no tokens.
pub fn tokenize(raw: &str, config: &NormalizationConfig) -> Vec<Token> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|surface| {
            let normalized = config.normalize(surface);
            let has_letters = normalized.chars().any(char::is_alphabetic);
            let has_digits = normalized.chars().any(|c| c.is_numeric());
            let is_lexical = has_letters
                && !has_digits
                && normalized.chars().count() >= config.min_token_len
                && !config.is_stopword(&normalized);
            Token {
                surface: surface.to_string(),
                normalized,
                is_lexical,
            }
        })
        .collect()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
