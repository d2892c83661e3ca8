//! Lexical links between sentences and per-sentence link sets.
//!
//! A link is one repeated lexical item shared by two different sentences. For
//! each shared normalized type the pair gets `min(occurrences in a,
//! occurrences in b)` links.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{Document, Sentence};

/// Name of the link-counting convention, recorded in run metadata.
pub const LINK_CONVENTION: &str = "per-type-min-multiplicity";

/// Number of links between two distinct sentences.
///
/// # Panics
///
/// Panics when both sentences carry the same index.
pub fn count_links(a: &Sentence, b: &Sentence) -> u32 {
    assert_ne!(
        a.index, b.index,
        "links hold between two separate sentences"
    );
    shared_links(&a.lexical_counts(), &b.lexical_counts())
}

fn shared_links(
    a: &std::collections::BTreeMap<&str, u32>,
    b: &std::collections::BTreeMap<&str, u32>,
) -> u32 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(item, &n)| large.get(item).map(|&m| n.min(m)))
        .sum()
}

/// Symmetric pairwise link counts over sentences `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkMatrix {
    n: usize,
    // row-major strict upper triangle
    counts: Vec<u32>,
}

impl LinkMatrix {
    /// All-zero matrix over `n` sentences.
    pub fn new(n: usize) -> Self {
        LinkMatrix {
            n,
            counts: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    /// Builds a matrix from `(i, j, count)` triples; later triples overwrite earlier ones.
    pub fn from_counts(n: usize, counts: impl IntoIterator<Item = (usize, usize, u32)>) -> Self {
        let mut matrix = LinkMatrix::new(n);
        for (i, j, c) in counts {
            matrix.set(i, j, c);
        }
        matrix
    }

    pub fn sentence_count(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        assert!(i != j, "no link count is defined for a sentence with itself ({i})");
        assert!(
            (1..=self.n).contains(&i) && (1..=self.n).contains(&j),
            "sentence pair ({i}, {j}) outside 1..={}",
            self.n
        );
        let (lo, hi) = if i < j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        // rows 0..lo hold (n-1) + (n-2) + ... entries
        lo * (2 * self.n - lo - 1) / 2 + (hi - lo - 1)
    }

    /// Link count for a pair of distinct 1-based sentence indices, in either order.
    ///
    /// # Panics
    ///
    /// Panics when `i == j` or either index is out of range.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, count: u32) {
        let slot = self.slot(i, j);
        self.counts[slot] = count;
    }

    /// Sum of all pairwise counts.
    pub fn total_links(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// `(i, j, count)` for every pair with `i < j` and a nonzero count, in row order.
    pub fn nonzero_pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (1..=self.n)
            .flat_map(move |i| (i + 1..=self.n).map(move |j| (i, j)))
            .zip(self.counts.iter())
            .filter(|(_, &c)| c > 0)
            .map(|((i, j), &c)| (i, j, c))
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        LinkMatrix {
            n: self.n,
            counts: self.counts.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Debug export: `i,j,count` rows for nonzero pairs, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,count\n");
        for (i, j, c) in self.nonzero_pairs() {
            let _ = writeln!(out, "{i},{j},{c}");
        }
        out
    }
}

/// Counts links for every unordered sentence pair of `doc`.
pub fn build_link_matrix(doc: &Document) -> LinkMatrix {
    let items: Vec<_> = doc.sentences().iter().map(Sentence::lexical_counts).collect();
    let n = items.len();
    let mut matrix = LinkMatrix::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let count = shared_links(&items[i], &items[j]);
            if count > 0 {
                matrix.set(i + 1, j + 1, count);
            }
        }
    }
    matrix
}

/// Minimum pairwise link count for a partner to enter a link set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct LinkLevel(u32);

impl LinkLevel {
    pub const ONE: LinkLevel = LinkLevel(1);

    pub fn new(level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidArgument("link level must be at least 1".into()));
        }
        Ok(LinkLevel(level))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// The six levels swept in a standard corpus run.
    pub fn standard_sweep() -> Vec<LinkLevel> {
        (1..=6).map(LinkLevel).collect()
    }

    /// Parses `N` or an inclusive range `N..M`.
    pub fn parse_range(spec: &str) -> Result<Vec<LinkLevel>> {
        let bad = || Error::InvalidArgument(format!("bad link level `{spec}`; expected N or N..M"));
        let spec = spec.trim();
        let (lo, hi) = match spec.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                (lo.trim().parse::<u32>(), hi.trim().parse::<u32>())
            }
            None => (spec.parse::<u32>(), spec.parse::<u32>()),
        };
        let (lo, hi) = (lo.map_err(|_| bad())?, hi.map_err(|_| bad())?);
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        Ok((lo..=hi).map(LinkLevel).collect())
    }
}

impl Default for LinkLevel {
    fn default() -> Self {
        LinkLevel::ONE
    }
}

impl TryFrom<u32> for LinkLevel {
    type Error = Error;

    fn try_from(level: u32) -> Result<Self> {
        LinkLevel::new(level)
    }
}

impl From<LinkLevel> for u32 {
    fn from(level: LinkLevel) -> u32 {
        level.0
    }
}

impl std::fmt::Display for LinkLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Partner sentences of `owner`, one entry per link, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSet {
    pub owner: usize,
    pub entries: Vec<usize>,
}

impl LinkSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Number of entries naming `partner`.
    pub fn multiplicity(&self, partner: usize) -> usize {
        self.entries.iter().filter(|&&e| e == partner).count()
    }
}

/// One link set per sentence. Partner `j` enters sentence `i`'s set
/// `count(i, j)` times when `count(i, j) >= level`, otherwise not at all.
pub fn build_link_sets(matrix: &LinkMatrix, level: LinkLevel) -> Vec<LinkSet> {
    let n = matrix.sentence_count();
    (1..=n)
        .map(|owner| {
            let mut entries = Vec::new();
            for partner in (1..=n).filter(|&p| p != owner) {
                let count = matrix.get(owner, partner);
                if count >= level.get() {
                    entries.extend(std::iter::repeat_n(partner, count as usize));
                }
            }
            LinkSet { owner, entries }
        })
        .collect()
}
