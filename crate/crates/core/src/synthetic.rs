//! Generated corpora with planted topic seams.
//!
//! Each document is a run of topic blocks. Blocks draw their content words
//! from private vocabularies (no normalized form is shared between blocks), so
//! every lexical link stays inside a block, and a section heading is placed at
//! each seam. These are the fixtures for checking that LSM finds seams a
//! random segmenter does not.

use std::collections::{BTreeSet, HashSet};
use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::baselines::{derive_seed, trial_rng};
use crate::error::{Error, Result};
use crate::text::{tokenize, CorpusDocument, Document, Heading, NormalizationConfig};

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "gl", "pl", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["k", "m", "n", "p", "r", "t", "x", "nd", "rk", "lt"];
const FILLERS: &[&str] = &["the", "of", "and", "in", "a", "is", "with", "for", "to", "was"];

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub sentences: RangeInclusive<usize>,
    pub blocks: RangeInclusive<usize>,
    /// Smallest number of sentences in a block.
    pub min_block: usize,
    pub vocabulary_per_block: usize,
    pub content_words: RangeInclusive<usize>,
    /// Also put a heading before sentence 1.
    pub opening_heading: bool,
    pub seed: u64,
    pub genre: String,
}

impl SyntheticSpec {
    /// 30–60 sentences in 3–6 blocks.
    pub fn multi_topic(documents: usize, seed: u64) -> Self {
        SyntheticSpec {
            documents,
            sentences: 30..=60,
            blocks: 3..=6,
            min_block: 4,
            vocabulary_per_block: 10,
            content_words: 3..=6,
            opening_heading: true,
            seed,
            genre: "synthetic".into(),
        }
    }

    /// Two blocks, one seam.
    pub fn single_seam(documents: usize, seed: u64) -> Self {
        SyntheticSpec {
            documents,
            sentences: 12..=30,
            blocks: 2..=2,
            min_block: 5,
            vocabulary_per_block: 10,
            content_words: 3..=6,
            opening_heading: false,
            seed,
            genre: "two-topic".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDocument {
    pub corpus: CorpusDocument,
    /// First sentence of every block after the first.
    pub seams: BTreeSet<usize>,
}

pub fn generate(spec: &SyntheticSpec, config: &NormalizationConfig) -> Result<Vec<SyntheticDocument>> {
    if spec.blocks.is_empty() || *spec.blocks.start() == 0 || spec.content_words.is_empty() {
        return Err(Error::InvalidArgument("empty block or word ranges".into()));
    }
    if spec.blocks.end() * spec.min_block.max(1) > *spec.sentences.start() {
        return Err(Error::InvalidArgument(
            "shortest document cannot hold the largest block count".into(),
        ));
    }
    (0..spec.documents)
        .map(|i| generate_one(spec, i, config))
        .collect()
}

fn generate_one(
    spec: &SyntheticSpec,
    index: usize,
    config: &NormalizationConfig,
) -> Result<SyntheticDocument> {
    let id = format!("{}-{index:03}", spec.genre);
    let mut rng = trial_rng(derive_seed(spec.seed, &id), 0);
    let n = rng.random_range(spec.sentences.clone());
    let blocks = rng.random_range(spec.blocks.clone());
    let min_block = spec.min_block.max(1);

    let mut sizes = vec![min_block; blocks];
    for _ in 0..n - blocks * min_block {
        sizes[rng.random_range(0..blocks)] += 1;
    }

    let mut used = HashSet::new();
    let mut sentences = Vec::with_capacity(n);
    let mut headings = Vec::new();
    let mut seams = BTreeSet::new();
    for (b, &size) in sizes.iter().enumerate() {
        let start = sentences.len() + 1;
        if b > 0 {
            seams.insert(start);
        }
        if b > 0 || spec.opening_heading {
            headings.push(Heading {
                position: start,
                title: format!("Topic {}", b + 1),
            });
        }
        let vocabulary: Vec<String> = (0..spec.vocabulary_per_block)
            .map(|_| fresh_word(&mut rng, &mut used, config))
            .collect();
        for _ in 0..size {
            sentences.push(sentence(&mut rng, &vocabulary, spec));
        }
    }

    let document = Document::new(id, &sentences, headings, config)?;
    Ok(SyntheticDocument {
        corpus: CorpusDocument {
            genre: spec.genre.clone(),
            document,
        },
        seams,
    })
}

fn fresh_word<R: Rng>(rng: &mut R, used: &mut HashSet<String>, config: &NormalizationConfig) -> String {
    loop {
        let syllables = rng.random_range(2..=3);
        let mut word = String::new();
        for _ in 0..syllables {
            word.push_str(ONSETS.choose(rng).unwrap());
            word.push_str(VOWELS.choose(rng).unwrap());
        }
        word.push_str(CODAS.choose(rng).unwrap());
        let tokens = tokenize(&word, config);
        if let [token] = tokens.as_slice() {
            if token.is_lexical && used.insert(token.normalized.clone()) {
                return word;
            }
        }
    }
}

fn sentence<R: Rng>(rng: &mut R, vocabulary: &[String], spec: &SyntheticSpec) -> String {
    let count = rng.random_range(spec.content_words.clone());
    let mut words: Vec<&str> = Vec::with_capacity(count * 2);
    for _ in 0..count {
        if rng.random_bool(0.5) {
            words.push(FILLERS.choose(rng).unwrap());
        }
        words.push(vocabulary.choose(rng).unwrap());
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1).map(str::to_uppercase) {
        text.replace_range(..1, &first);
    }
    text.push('.');
    text
}
