//! The Link Set Median segmenter.
//!
//! Each sentence's link set is reduced to its median, a positional centre of
//! the sentences it is lexically tied to. Consecutive medians are differenced,
//! and a boundary is placed before every sentence whose difference is strictly
//! greater than the mean difference over the text.
//!
//! Medians of integer multisets are integers or half-integers, so all
//! arithmetic here is exact over [`Ratio<u64>`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::cohesion::{build_link_matrix, build_link_sets, LinkLevel, LinkMatrix, LinkSet};
use crate::error::{Error, Result};
use crate::text::Document;

pub type Rational = Ratio<u64>;

/// Standard median: middle element for odd sizes, mean of the two middle
/// elements for even sizes. `None` for an empty multiset.
pub fn median(entries: &[usize]) -> Option<Rational> {
    if entries.is_empty() {
        return None;
    }
    let mut sorted = entries.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    let value = if sorted.len() % 2 == 1 {
        Rational::from_integer(sorted[mid] as u64)
    } else {
        Rational::new((sorted[mid - 1] + sorted[mid]) as u64, 2)
    };
    Some(value)
}

/// How sentences with an empty link set enter the median series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptySetPolicy {
    /// Reuse the last defined median; a leading run of empty sets stays undefined.
    #[default]
    CarryForward,
    /// Treat the median of an empty set as 0.
    Zero,
    /// Leave it undefined, so both adjacent differences are undefined.
    Exclude,
}

impl FromStr for EmptySetPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "carry-forward" => Ok(EmptySetPolicy::CarryForward),
            "zero" => Ok(EmptySetPolicy::Zero),
            "exclude" => Ok(EmptySetPolicy::Exclude),
            other => Err(Error::InvalidArgument(format!(
                "unknown empty link set policy `{other}`"
            ))),
        }
    }
}

impl fmt::Display for EmptySetPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmptySetPolicy::CarryForward => "carry-forward",
            EmptySetPolicy::Zero => "zero",
            EmptySetPolicy::Exclude => "exclude",
        })
    }
}

/// Per-sentence link set medians; `values[i - 1]` belongs to sentence `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MedianSeries {
    pub values: Vec<Option<Rational>>,
}

impl MedianSeries {
    pub fn from_link_sets(sets: &[LinkSet]) -> Self {
        MedianSeries {
            values: sets.iter().map(|s| median(&s.entries)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The series after applying `policy` to undefined medians.
    pub fn effective(&self, policy: EmptySetPolicy) -> Vec<Option<Rational>> {
        match policy {
            EmptySetPolicy::Exclude => self.values.clone(),
            EmptySetPolicy::Zero => self
                .values
                .iter()
                .map(|v| Some(v.unwrap_or_else(|| Rational::from_integer(0))))
                .collect(),
            EmptySetPolicy::CarryForward => {
                let mut last = None;
                self.values
                    .iter()
                    .map(|v| {
                        if v.is_some() {
                            last = *v;
                        }
                        last
                    })
                    .collect()
            }
        }
    }
}

/// Absolute differences between consecutive effective medians.
///
/// `diffs[k]` belongs to sentence `k + 2`; it is `None` when either side has no
/// effective median.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MedianDifferences {
    pub diffs: Vec<Option<Rational>>,
}

impl MedianDifferences {
    /// Difference between sentence `i` and its predecessor, for `i >= 2`.
    pub fn at(&self, sentence: usize) -> Option<Rational> {
        sentence
            .checked_sub(2)
            .and_then(|k| self.diffs.get(k).copied().flatten())
    }

    /// `(sentence, diff)` for every defined difference.
    pub fn defined(&self) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.diffs
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|d| (k + 2, d)))
    }
}

pub fn median_differences(series: &MedianSeries, policy: EmptySetPolicy) -> MedianDifferences {
    let effective = series.effective(policy);
    let diffs = effective
        .windows(2)
        .map(|pair| match (pair[0], pair[1]) {
            (Some(a), Some(b)) => Some(if a > b { a - b } else { b - a }),
            _ => None,
        })
        .collect();
    MedianDifferences { diffs }
}

/// Arithmetic mean over the defined differences; `None` when there are none.
pub fn mean_median_difference(diffs: &MedianDifferences) -> Option<Rational> {
    let (sum, count) = diffs
        .defined()
        .fold((Rational::from_integer(0), 0u64), |(s, c), (_, d)| (s + d, c + 1));
    (count > 0).then(|| sum / count)
}

/// Sentences whose difference is strictly greater than the text mean.
pub fn place_boundaries(diffs: &MedianDifferences) -> BTreeSet<usize> {
    match mean_median_difference(diffs) {
        Some(mean) => diffs
            .defined()
            .filter(|&(_, d)| d > mean)
            .map(|(i, _)| i)
            .collect(),
        None => BTreeSet::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lsm,
    Random,
    Combined,
    External,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lsm => "lsm",
            Method::Random => "random",
            Method::Combined => "combined",
            Method::External => "external",
        })
    }
}

/// Boundary positions over a text of `sentence_count` sentences. A boundary
/// at `i` means sentence `i` opens a new segment, so every boundary lies in
/// `2..=sentence_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    sentence_count: usize,
    boundaries: BTreeSet<usize>,
    method: Method,
}

impl Segmentation {
    pub fn new(
        sentence_count: usize,
        boundaries: impl IntoIterator<Item = usize>,
        method: Method,
    ) -> Result<Self> {
        let boundaries: BTreeSet<usize> = boundaries.into_iter().collect();
        if let Some(&bad) = boundaries
            .iter()
            .find(|&&b| b < 2 || b > sentence_count)
        {
            return Err(Error::InvalidSegmentation(format!(
                "boundary {bad} outside 2..={sentence_count}"
            )));
        }
        Ok(Segmentation {
            sentence_count,
            boundaries,
            method,
        })
    }

    pub fn empty(sentence_count: usize, method: Method) -> Self {
        Segmentation {
            sentence_count,
            boundaries: BTreeSet::new(),
            method,
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    pub fn boundaries(&self) -> &BTreeSet<usize> {
        &self.boundaries
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Sentence ranges `(first, last)` of the induced segments.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut starts: Vec<usize> = std::iter::once(1).chain(self.boundaries.iter().copied()).collect();
        starts.push(self.sentence_count + 1);
        starts.windows(2).map(|w| (w[0], w[1] - 1)).collect()
    }
}

/// Union of two segmentations of the same text.
pub fn combine(a: &Segmentation, b: &Segmentation) -> Result<Segmentation> {
    if a.sentence_count != b.sentence_count {
        return Err(Error::LengthMismatch {
            left: a.sentence_count,
            right: b.sentence_count,
        });
    }
    Ok(Segmentation {
        sentence_count: a.sentence_count,
        boundaries: a.boundaries.union(&b.boundaries).copied().collect(),
        method: Method::Combined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LsmConfig {
    pub level: LinkLevel,
    pub empty_sets: EmptySetPolicy,
}

impl LsmConfig {
    pub fn at_level(level: LinkLevel) -> Self {
        LsmConfig {
            level,
            ..Default::default()
        }
    }
}

/// Why a text produced no boundaries regardless of its content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneracy {
    /// No sentence pair reaches the link level.
    NoLinks,
    /// Links exist but no median difference is defined.
    NoDifferences,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Degeneracy::NoLinks => "no links at this level",
            Degeneracy::NoDifferences => "no defined median differences",
        })
    }
}

/// Every intermediate of one segmentation run.
#[derive(Debug, Clone)]
pub struct LsmTrace {
    pub config: LsmConfig,
    pub link_sets: Vec<LinkSet>,
    pub medians: MedianSeries,
    pub differences: MedianDifferences,
    pub mean_difference: Option<Rational>,
    pub segmentation: Segmentation,
    pub degenerate: Option<Degeneracy>,
}

pub fn segment_matrix(matrix: &LinkMatrix, config: LsmConfig) -> LsmTrace {
    let n = matrix.sentence_count();
    let link_sets = build_link_sets(matrix, config.level);
    let medians = MedianSeries::from_link_sets(&link_sets);
    let differences = median_differences(&medians, config.empty_sets);
    let mean_difference = mean_median_difference(&differences);

    let degenerate = if link_sets.iter().all(LinkSet::is_empty) {
        Some(Degeneracy::NoLinks)
    } else if mean_difference.is_none() {
        Some(Degeneracy::NoDifferences)
    } else {
        None
    };

    let boundaries = place_boundaries(&differences);

    LsmTrace {
        config,
        link_sets,
        medians,
        differences,
        mean_difference,
        segmentation: Segmentation {
            sentence_count: n,
            boundaries,
            method: Method::Lsm,
        },
        degenerate,
    }
}

pub fn segment_with(doc: &Document, config: LsmConfig) -> LsmTrace {
    segment_matrix(&build_link_matrix(doc), config)
}

/// LSM boundaries for `doc` at `level`, with carry-forward over empty link sets.
pub fn segment(doc: &Document, level: LinkLevel) -> Segmentation {
    segment_with(doc, LsmConfig::at_level(level)).segmentation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::NormalizationConfig;

    fn r(n: u64, d: u64) -> Rational {
        Rational::new(n, d)
    }

    fn int(n: u64) -> Rational {
        Rational::from_integer(n)
    }

    fn series(values: &[Option<u64>]) -> MedianSeries {
        MedianSeries {
            values: values.iter().map(|v| v.map(int)).collect(),
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[4, 4, 6, 6, 6]), Some(int(6)));
        assert_eq!(median(&[6, 4, 6, 4, 6]), Some(int(6)));
        assert_eq!(median(&[2, 4]), Some(int(3)));
        assert_eq!(median(&[2, 5]), Some(r(7, 2)));
        assert_eq!(median(&[7]), Some(int(7)));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn differences_of_defined_series() {
        let d = median_differences(&series(&[Some(6), Some(6), Some(10)]), EmptySetPolicy::CarryForward);
        assert_eq!(d.diffs, [Some(int(0)), Some(int(4))]);
        assert_eq!(d.at(3), Some(int(4)));
        assert_eq!(d.at(1), None);
    }

    #[test]
    fn carry_forward_fills_gaps() {
        let s = series(&[Some(5), None, Some(5)]);
        let d = median_differences(&s, EmptySetPolicy::CarryForward);
        assert_eq!(d.diffs, [Some(int(0)), Some(int(0))]);

        let d = median_differences(&s, EmptySetPolicy::Exclude);
        assert_eq!(d.diffs, [None, None]);

        let d = median_differences(&s, EmptySetPolicy::Zero);
        assert_eq!(d.diffs, [Some(int(5)), Some(int(5))]);
    }

    #[test]
    fn leading_empty_run_stays_undefined() {
        let s = series(&[None, None, Some(3), Some(1)]);
        let d = median_differences(&s, EmptySetPolicy::CarryForward);
        assert_eq!(d.diffs, [None, None, Some(int(2))]);
    }

    #[test]
    fn single_defined_median_gives_no_diffs() {
        let s = series(&[Some(2), None, None]);
        let d = median_differences(&s, EmptySetPolicy::Exclude);
        assert!(d.defined().next().is_none());
        assert_eq!(mean_median_difference(&d), None);
        let s = series(&[None, None, Some(2)]);
        let d = median_differences(&s, EmptySetPolicy::CarryForward);
        assert!(d.defined().next().is_none());
    }

    #[test]
    fn means() {
        let mk = |v: &[u64]| MedianDifferences {
            diffs: v.iter().map(|&x| Some(int(x))).collect(),
        };
        assert_eq!(mean_median_difference(&mk(&[0, 4])), Some(int(2)));
        assert_eq!(mean_median_difference(&mk(&[3])), Some(int(3)));
        assert_eq!(mean_median_difference(&mk(&[0, 0, 0])), Some(int(0)));
        let partial = MedianDifferences {
            diffs: vec![None, Some(int(1)), None, Some(int(2))],
        };
        assert_eq!(mean_median_difference(&partial), Some(r(3, 2)));
    }

    fn doc(sentences: &[&str]) -> Document {
        Document::new("t", sentences, vec![], &NormalizationConfig::default()).unwrap()
    }

    #[test]
    fn two_topic_seam() {
        let d = doc(&[
            "cacao coffee timber",
            "cacao coffee timber",
            "cacao coffee timber",
            "cacao coffee timber",
            "franc currency dollar",
            "franc currency dollar",
            "franc currency dollar",
            "franc currency dollar",
        ]);
        let trace = segment_with(&d, LsmConfig::default());
        assert_eq!(
            trace.medians.values,
            [3, 3, 2, 2, 7, 7, 6, 6].map(|v| Some(int(v)))
        );
        assert_eq!(trace.mean_difference, Some(int(1)));
        assert_eq!(trace.segmentation.boundaries(), &BTreeSet::from([5]));
        assert_eq!(trace.degenerate, None);
    }

    #[test]
    fn uniform_cohesion() {
        // three sentences: medians 5/2, 2, 3/2 step down evenly
        let d = doc(&["cacao coffee", "cacao coffee", "cacao coffee"]);
        let trace = segment_with(&d, LsmConfig::default());
        assert_eq!(trace.differences.diffs, [Some(r(1, 2)), Some(r(1, 2))]);
        assert!(trace.segmentation.boundaries().is_empty());

        // Longer texts are not flat: excluding the owner shifts the median
        // across the middle of the text. Five sentences give 7/2, 7/2, 3, 5/2, 5/2.
        let d = doc(&["cacao coffee"; 5]);
        let trace = segment_with(&d, LsmConfig::default());
        assert_eq!(
            trace.medians.values,
            [r(7, 2), r(7, 2), int(3), r(5, 2), r(5, 2)].map(Some)
        );
        assert_eq!(trace.segmentation.boundaries(), &BTreeSet::from([3, 4]));
    }

    #[test]
    fn constant_nonzero_diffs_give_no_boundaries() {
        let d = median_differences(
            &series(&[Some(1), Some(4), Some(1), Some(4), Some(1)]),
            EmptySetPolicy::CarryForward,
        );
        assert!(d.defined().all(|(_, v)| v == int(3)));
        assert!(place_boundaries(&d).is_empty());

        let d = MedianDifferences {
            diffs: vec![Some(r(1, 3)); 7],
        };
        assert!(place_boundaries(&d).is_empty());
    }

    #[test]
    fn chain_of_neighbours() {
        // 1-2, 2-3, ..., 5-6: medians 2, 2, 3, 4, 5, 5
        let m = LinkMatrix::from_counts(6, (1..6).map(|i| (i, i + 1, 1)));
        let trace = segment_matrix(&m, LsmConfig::default());
        assert_eq!(trace.mean_difference, Some(r(3, 5)));
        assert_eq!(trace.segmentation.boundaries(), &BTreeSet::from([3, 4, 5]));
    }

    #[test]
    fn linkless_text_is_degenerate() {
        let d = doc(&["cacao harvest", "franc currency", "party constitution"]);
        let trace = segment_with(&d, LsmConfig::default());
        assert_eq!(trace.degenerate, Some(Degeneracy::NoLinks));
        assert!(trace.segmentation.boundaries().is_empty());
        assert_eq!(trace.mean_difference, None);
    }

    #[test]
    fn worked_link_set_through_the_segmenter() {
        let d = doc(&[
            "cacao timber yams bananas millet",
            "franc",
            "currency",
            "bananas millet",
            "dollar",
            "cacao timber yams",
            "party",
        ]);
        let trace = segment_with(&d, LsmConfig::default());
        assert_eq!(trace.link_sets[0].entries, [4, 4, 6, 6, 6]);
        assert_eq!(trace.medians.values[0], Some(int(6)));
    }

    #[test]
    fn segmentation_range_is_checked() {
        assert!(Segmentation::new(5, [2, 5], Method::External).is_ok());
        assert!(Segmentation::new(5, [1], Method::External).is_err());
        assert!(Segmentation::new(5, [6], Method::External).is_err());
    }

    #[test]
    fn segments_cover_the_text() {
        let s = Segmentation::new(9, [5, 7], Method::External).unwrap();
        assert_eq!(s.segments(), [(1, 4), (5, 6), (7, 9)]);
        assert_eq!(Segmentation::empty(3, Method::Lsm).segments(), [(1, 3)]);
    }

    #[test]
    fn combine_unions() {
        let a = Segmentation::new(10, [5], Method::Lsm).unwrap();
        let b = Segmentation::new(10, [9], Method::External).unwrap();
        let c = combine(&a, &b).unwrap();
        assert_eq!(c.boundaries(), &BTreeSet::from([5, 9]));
        assert_eq!(c.method(), Method::Combined);
        assert_eq!(combine(&a, &a).unwrap().boundaries(), a.boundaries());
        let short = Segmentation::new(8, [5], Method::External).unwrap();
        assert!(matches!(combine(&a, &short), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn policy_names_round_trip() {
        for p in [EmptySetPolicy::CarryForward, EmptySetPolicy::Zero, EmptySetPolicy::Exclude] {
            assert_eq!(p.to_string().parse::<EmptySetPolicy>().unwrap(), p);
        }
        assert!("skip".parse::<EmptySetPolicy>().is_err());
    }
}
