//! Boundary scoring against section headings, corpus aggregation, and the
//! permutation test used to compare LSM with the random baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::baselines::{trial_rng, BaselineReport};
use crate::error::{Error, Result};
use crate::lsm::{Method, Segmentation};
use crate::text::Document;

/// How precision is read, recorded in run metadata.
pub const PRECISION_READING: &str = "matched boundaries / inserted boundaries";
/// Genre label for corpus-wide rows.
pub const ALL_GENRES: &str = "all";
/// Fewest label permutations [`significance`] will run.
pub const MIN_PERMUTATIONS: usize = 10_000;

/// Author section starts, excluding the one every text trivially has at sentence 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSegments {
    sentence_count: usize,
    positions: BTreeSet<usize>,
}

impl ReferenceSegments {
    pub fn new(sentence_count: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self> {
        let positions: BTreeSet<usize> = positions.into_iter().collect();
        if let Some(&bad) = positions.iter().find(|&&p| p < 2 || p > sentence_count) {
            return Err(Error::InvalidArgument(format!(
                "reference position {bad} outside 2..={sentence_count}"
            )));
        }
        Ok(ReferenceSegments {
            sentence_count,
            positions,
        })
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    pub fn positions(&self) -> &BTreeSet<usize> {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn extract_reference(doc: &Document) -> ReferenceSegments {
    ReferenceSegments {
        sentence_count: doc.len(),
        positions: doc.heading_positions().into_iter().filter(|&p| p != 1).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryMatch {
    pub inserted: usize,
    pub reference: usize,
}

/// Pairs inserted boundaries with reference positions lying within `window`
/// sentences. Each side is used at most once and the number of pairs is the
/// largest possible. Among maximum pairings, reference positions are served
/// left to right, each credited to its nearest free inserted boundary
/// (leftmost on ties). Pairs come back ordered by reference position.
pub fn match_boundaries(
    inserted: &BTreeSet<usize>,
    reference: &BTreeSet<usize>,
    window: usize,
) -> Vec<BoundaryMatch> {
    let inserted: Vec<usize> = inserted.iter().copied().collect();
    let reference: Vec<usize> = reference.iter().copied().collect();
    let mut taken = vec![false; inserted.len()];
    let target = max_pairing(&reference, &inserted, &taken, window);

    let mut matches = Vec::with_capacity(target);
    for (idx, &r) in reference.iter().enumerate() {
        if matches.len() == target {
            break;
        }
        let mut candidates: Vec<usize> = (0..inserted.len())
            .filter(|&j| !taken[j] && inserted[j].abs_diff(r) <= window)
            .collect();
        candidates.sort_by_key(|&j| (inserted[j].abs_diff(r), inserted[j]));
        for j in candidates {
            taken[j] = true;
            let rest = max_pairing(&reference[idx + 1..], &inserted, &taken, window);
            if matches.len() + 1 + rest == target {
                matches.push(BoundaryMatch {
                    inserted: inserted[j],
                    reference: r,
                });
                break;
            }
            taken[j] = false;
        }
    }
    matches
}

// Sorted points with equal-width windows: giving each point on the left the
// leftmost free partner it can reach yields a maximum pairing.
fn max_pairing(left: &[usize], right: &[usize], taken: &[bool], window: usize) -> usize {
    let mut used = taken.to_vec();
    let mut count = 0;
    for &p in left {
        let lo = p.saturating_sub(window);
        let start = right.partition_point(|&r| r < lo);
        if let Some(j) = (start..right.len())
            .take_while(|&j| right[j] <= p + window)
            .find(|&j| !used[j])
        {
            used[j] = true;
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScore {
    pub matches: Vec<BoundaryMatch>,
    pub inserted_count: usize,
    pub reference_count: usize,
    /// `None` when there are no reference boundaries.
    pub recall: Option<f64>,
    /// `None` when nothing was inserted.
    pub precision: Option<f64>,
}

impl BoundaryScore {
    pub fn matched_references(&self) -> BTreeSet<usize> {
        self.matches.iter().map(|m| m.reference).collect()
    }
}

/// Recall and precision of `seg` against `reference`. With `window == 0`
/// only exact sentence equality counts as a match.
///
/// # Panics
///
/// Panics when the two sides describe texts of different lengths.
pub fn score(seg: &Segmentation, reference: &ReferenceSegments, window: usize) -> BoundaryScore {
    assert_eq!(
        seg.sentence_count(),
        reference.sentence_count(),
        "segmentation and reference cover different texts"
    );
    score_sets(seg.boundaries(), reference.positions(), window)
}

pub(crate) fn score_sets(
    inserted: &BTreeSet<usize>,
    reference: &BTreeSet<usize>,
    window: usize,
) -> BoundaryScore {
    let matches = match_boundaries(inserted, reference, window);
    let hits = matches.len() as f64;
    BoundaryScore {
        inserted_count: inserted.len(),
        reference_count: reference.len(),
        recall: (!reference.is_empty()).then(|| hits / reference.len() as f64),
        precision: (!inserted.is_empty()).then(|| hits / inserted.len() as f64),
        matches,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub doc_id: String,
    pub genre: String,
    pub method: Method,
    pub link_level: Option<u32>,
    pub window: usize,
    #[serde(flatten)]
    pub score: BoundaryScore,
}

/// Anything [`aggregate`] can average: one method's scores on one document.
pub trait DocumentScore {
    fn method(&self) -> Method;
    fn genre(&self) -> &str;
    fn link_level(&self) -> Option<u32>;
    fn recall(&self) -> Option<f64>;
    fn precision(&self) -> Option<f64>;
}

impl DocumentScore for EvalReport {
    fn method(&self) -> Method {
        self.method
    }
    fn genre(&self) -> &str {
        &self.genre
    }
    fn link_level(&self) -> Option<u32> {
        self.link_level
    }
    fn recall(&self) -> Option<f64> {
        self.score.recall
    }
    fn precision(&self) -> Option<f64> {
        self.score.precision
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Recall,
    Precision,
}

impl Measure {
    pub fn of<R: DocumentScore + ?Sized>(self, report: &R) -> Option<f64> {
        match self {
            Measure::Recall => report.recall(),
            Measure::Precision => report.precision(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Measure::Recall => "Recall",
            Measure::Precision => "Precision",
        }
    }
}

/// Unweighted mean of one method's per-document scores for a genre and level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub method: Method,
    pub genre: String,
    pub link_level: Option<u32>,
    pub documents: usize,
    pub mean_recall: Option<f64>,
    pub recall_documents: usize,
    pub mean_precision: Option<f64>,
    pub precision_documents: usize,
}

/// Mean of level means (per genre), or of genre means (genre `all`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub genre: String,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTest {
    pub measure: Measure,
    pub genre: String,
    pub link_level: Option<u32>,
    pub lsm_mean: f64,
    pub random_mean: f64,
    pub lsm_documents: usize,
    pub random_documents: usize,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub levels: Vec<LevelSummary>,
    pub genres: Vec<MethodSummary>,
    pub overall: Vec<MethodSummary>,
    #[serde(default)]
    pub significance: Vec<SignificanceTest>,
    #[serde(default)]
    pub baseline: Vec<BaselineReport>,
}

impl CorpusSummary {
    pub fn level(&self, method: Method, genre: &str, level: Option<u32>) -> Option<&LevelSummary> {
        self.levels
            .iter()
            .find(|l| l.method == method && l.genre == genre && l.link_level == level)
    }

    pub fn genre(&self, method: Method, genre: &str) -> Option<&MethodSummary> {
        self.genres
            .iter()
            .find(|g| g.method == method && g.genre == genre)
    }

    pub fn overall(&self, method: Method) -> Option<&MethodSummary> {
        self.overall.iter().find(|g| g.method == method)
    }

    /// Rows `measure,method,genre,value` with values in percent, one per
    /// genre plus the `all` row for each method.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("measure,method,genre,value\n");
        for measure in [Measure::Recall, Measure::Precision] {
            let mut rows: Vec<&MethodSummary> =
                self.genres.iter().chain(self.overall.iter()).collect();
            rows.sort_by_key(|r| (r.method, r.genre == ALL_GENRES));
            for row in rows {
                let value = match measure {
                    Measure::Recall => row.mean_recall,
                    Measure::Precision => row.mean_precision,
                };
                let value = value.map(|v| format!("{:.2}", v * 100.0)).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", measure.label(), row.method, row.genre, value);
            }
        }
        out
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Per-level, per-genre and overall means. Not-applicable scores are skipped.
/// The result does not depend on the order of `reports`.
pub fn aggregate<R: DocumentScore>(reports: &[R]) -> CorpusSummary {
    type Key = (Method, String, Option<u32>);
    let mut groups: BTreeMap<Key, Vec<&R>> = BTreeMap::new();
    for report in reports {
        groups
            .entry((report.method(), report.genre().to_string(), report.link_level()))
            .or_default()
            .push(report);
    }

    let levels: Vec<LevelSummary> = groups
        .into_iter()
        .map(|((method, genre, link_level), members)| {
            // sort so float summation order is fixed
            let collect = |m: Measure| {
                let mut v: Vec<f64> = members.iter().filter_map(|r| m.of(*r)).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let recalls = collect(Measure::Recall);
            let precisions = collect(Measure::Precision);
            LevelSummary {
                method,
                genre,
                link_level,
                documents: members.len(),
                recall_documents: recalls.len(),
                mean_recall: mean(recalls),
                precision_documents: precisions.len(),
                mean_precision: mean(precisions),
            }
        })
        .collect();

    let mut by_genre: BTreeMap<(Method, &str), Vec<&LevelSummary>> = BTreeMap::new();
    for level in &levels {
        by_genre
            .entry((level.method, level.genre.as_str()))
            .or_default()
            .push(level);
    }
    let genres: Vec<MethodSummary> = by_genre
        .into_iter()
        .map(|((method, genre), rows)| MethodSummary {
            method,
            genre: genre.to_string(),
            mean_recall: mean(rows.iter().filter_map(|r| r.mean_recall)),
            mean_precision: mean(rows.iter().filter_map(|r| r.mean_precision)),
        })
        .collect();

    let mut by_method: BTreeMap<Method, Vec<&MethodSummary>> = BTreeMap::new();
    for g in &genres {
        by_method.entry(g.method).or_default().push(g);
    }
    let overall = by_method
        .into_iter()
        .map(|(method, rows)| MethodSummary {
            method,
            genre: ALL_GENRES.to_string(),
            mean_recall: mean(rows.iter().filter_map(|r| r.mean_recall)),
            mean_precision: mean(rows.iter().filter_map(|r| r.mean_precision)),
        })
        .collect();

    CorpusSummary {
        levels,
        genres,
        overall,
        significance: Vec::new(),
        baseline: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    /// Evidence that the first group's mean is larger.
    #[default]
    Greater,
    /// Evidence that the first group's mean is smaller.
    Less,
}

/// One-sided Monte Carlo permutation test on the difference of group means.
///
/// Group labels are reshuffled `permutations` times from a generator seeded
/// with `seed`; the p-value is `(hits + 1) / (permutations + 1)`, so it always
/// lies in `(0, 1]`.
pub fn permutation_p_value(
    first: &[f64],
    second: &[f64],
    permutations: usize,
    seed: u64,
    tail: Tail,
) -> Result<f64> {
    if first.is_empty() || second.is_empty() {
        return Err(Error::InvalidArgument(
            "permutation test needs two non-empty groups".into(),
        ));
    }
    if permutations == 0 {
        return Err(Error::InvalidArgument("permutations must be positive".into()));
    }
    // With the pooled total fixed, the mean difference is monotone in the
    // first group's sum, so the sum serves as the test statistic.
    let observed: f64 = first.iter().sum();
    let mut pooled: Vec<f64> = first.iter().chain(second).copied().collect();
    let tolerance = 1e-9 * (1.0 + pooled.iter().map(|v| v.abs()).sum::<f64>());
    let m = first.len();

    let mut rng = trial_rng(seed, 0);
    let mut hits = 0usize;
    for _ in 0..permutations {
        let (chosen, _) = pooled.partial_shuffle(&mut rng, m);
        let stat: f64 = chosen.iter().sum();
        let extreme = match tail {
            Tail::Greater => stat >= observed - tolerance,
            Tail::Less => stat <= observed + tolerance,
        };
        if extreme {
            hits += 1;
        }
    }
    Ok((hits as f64 + 1.0) / (permutations as f64 + 1.0))
}

/// p-value for "LSM scores exceed random scores", from [`MIN_PERMUTATIONS`] permutations.
pub fn significance(lsm_scores: &[f64], random_scores: &[f64], seed: u64) -> Result<f64> {
    permutation_p_value(lsm_scores, random_scores, MIN_PERMUTATIONS, seed, Tail::Greater)
}
