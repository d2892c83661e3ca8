//! Corpus-level runs: segment every document at every link level, then score
//! segmentations against the headings with an optional random baseline and
//! significance tests.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::baselines::{derive_seed, random_trial_scores, BaselineReport, RandomTrialConfig};
use crate::cohesion::{build_link_matrix, LinkLevel};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate, extract_reference, permutation_p_value, score, CorpusSummary, DocumentScore,
    EvalReport, Measure, SignificanceTest, Tail, ALL_GENRES, MIN_PERMUTATIONS,
};
use crate::lsm::{segment_matrix, EmptySetPolicy, LsmConfig, LsmTrace, Method};
use crate::records::SegmentationRecord;
use crate::text::CorpusDocument;

#[derive(Debug, Clone)]
pub struct CorpusSegmentation {
    /// Index into the corpus slice.
    pub doc_index: usize,
    pub level: LinkLevel,
    pub trace: LsmTrace,
}

/// LSM at each level for every document, ordered by document then level.
/// The link matrix of a document is built once and shared by its levels.
pub fn segment_corpus(
    docs: &[CorpusDocument],
    levels: &[LinkLevel],
    empty_sets: EmptySetPolicy,
) -> Vec<CorpusSegmentation> {
    docs.par_iter()
        .enumerate()
        .flat_map_iter(|(doc_index, doc)| {
            let matrix = build_link_matrix(&doc.document);
            levels
                .iter()
                .map(|&level| CorpusSegmentation {
                    doc_index,
                    level,
                    trace: segment_matrix(&matrix, LsmConfig { level, empty_sets }),
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvaluationConfig {
    pub window: usize,
    /// Random baseline settings; `None` skips the baseline and significance tests.
    pub random: Option<RandomTrialConfig>,
    pub permutations: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            window: 0,
            random: None,
            permutations: MIN_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationOutput {
    pub reports: Vec<EvalReport>,
    pub summary: CorpusSummary,
}

impl<T: DocumentScore + ?Sized> DocumentScore for &T {
    fn method(&self) -> Method {
        (**self).method()
    }
    fn genre(&self) -> &str {
        (**self).genre()
    }
    fn link_level(&self) -> Option<u32> {
        (**self).link_level()
    }
    fn recall(&self) -> Option<f64> {
        (**self).recall()
    }
    fn precision(&self) -> Option<f64> {
        (**self).precision()
    }
}

/// Scores every record against its document's headings.
///
/// With a random baseline configured, each LSM record gets a baseline over
/// the same document with a matched (or fixed) boundary count, and every
/// (genre, level) cell plus each level across all genres gets a one-sided
/// permutation test of LSM against the per-document baseline means.
pub fn evaluate_corpus(
    docs: &[CorpusDocument],
    records: &[SegmentationRecord],
    config: &EvaluationConfig,
) -> Result<EvaluationOutput> {
    let by_id: BTreeMap<&str, &CorpusDocument> =
        docs.iter().map(|d| (d.document.id(), d)).collect();

    let reports: Vec<EvalReport> = records
        .par_iter()
        .map(|record| {
            let doc = by_id.get(record.doc_id.as_str()).ok_or_else(|| {
                Error::Data(format!(
                    "segmentation names document `{}`, which is not in the corpus",
                    record.doc_id
                ))
            })?;
            let seg = record.to_segmentation(doc.document.len())?;
            let reference = extract_reference(&doc.document);
            Ok(EvalReport {
                doc_id: record.doc_id.clone(),
                genre: doc.genre.clone(),
                method: record.method,
                link_level: record.link_level,
                window: config.window,
                score: score(&seg, &reference, config.window),
            })
        })
        .collect::<Result<_>>()?;

    let baseline: Vec<BaselineReport> = match &config.random {
        None => Vec::new(),
        Some(random) => reports
            .par_iter()
            .filter(|r| r.method == Method::Lsm)
            .map(|report| {
                let doc = by_id[report.doc_id.as_str()];
                let reference = extract_reference(&doc.document);
                let n = doc.document.len();
                let k = random
                    .boundary_count()
                    .resolve(report.score.inserted_count, n);
                let label = match report.link_level {
                    Some(level) => format!("{}/L{level}", report.doc_id),
                    None => report.doc_id.clone(),
                };
                let seed = derive_seed(random.seed(), &label);
                let scores =
                    random_trial_scores(&reference, k, &random.reseeded(seed), config.window)?;
                Ok(BaselineReport::from_trials(
                    &report.doc_id,
                    &report.genre,
                    report.link_level,
                    k,
                    seed,
                    &scores,
                ))
            })
            .collect::<Result<_>>()?,
    };

    let rows: Vec<&dyn DocumentScore> = reports
        .iter()
        .map(|r| r as &dyn DocumentScore)
        .chain(baseline.iter().map(|b| b as &dyn DocumentScore))
        .collect();
    let mut summary = aggregate(&rows);

    if let Some(random) = &config.random {
        summary.significance = significance_cells(&reports, &baseline, random.seed(), config.permutations)?;
    }
    summary.baseline = baseline;
    Ok(EvaluationOutput { reports, summary })
}

fn significance_cells(
    reports: &[EvalReport],
    baseline: &[BaselineReport],
    seed: u64,
    permutations: usize,
) -> Result<Vec<SignificanceTest>> {
    let levels: BTreeSet<Option<u32>> = baseline.iter().map(|b| b.link_level).collect();
    let mut genres: BTreeSet<&str> = baseline.iter().map(|b| b.genre.as_str()).collect();
    genres.insert(ALL_GENRES);

    let mut cells = Vec::new();
    for measure in [Measure::Recall, Measure::Precision] {
        for &genre in &genres {
            for &level in &levels {
                let in_cell = |g: &str, l: Option<u32>| (genre == ALL_GENRES || g == genre) && l == level;
                let lsm: Vec<f64> = reports
                    .iter()
                    .filter(|r| r.method == Method::Lsm && in_cell(&r.genre, r.link_level))
                    .filter_map(|r| measure.of(r))
                    .collect();
                let random: Vec<f64> = baseline
                    .iter()
                    .filter(|b| in_cell(&b.genre, b.link_level))
                    .filter_map(|b| measure.of(b))
                    .collect();
                if lsm.is_empty() || random.is_empty() {
                    continue;
                }
                let level_label = level.map_or("-".to_string(), |l| l.to_string());
                let cell_seed = derive_seed(seed, &format!("{measure:?}/{genre}/{level_label}"));
                let p_value = permutation_p_value(&lsm, &random, permutations, cell_seed, Tail::Greater)?;
                cells.push(SignificanceTest {
                    measure,
                    genre: genre.to_string(),
                    link_level: level,
                    lsm_mean: lsm.iter().sum::<f64>() / lsm.len() as f64,
                    random_mean: random.iter().sum::<f64>() / random.len() as f64,
                    lsm_documents: lsm.len(),
                    random_documents: random.len(),
                    p_value,
                    permutations,
                    seed: cell_seed,
                });
            }
        }
    }
    Ok(cells)
}

/// Segmentation records for a corpus run, with warnings for degenerate texts.
pub fn segmentation_records(
    docs: &[CorpusDocument],
    runs: &[CorpusSegmentation],
) -> Vec<SegmentationRecord> {
    runs.iter()
        .map(|run| {
            let doc = &docs[run.doc_index];
            let mut record = SegmentationRecord::from_segmentation(
                doc.document.id(),
                &run.trace.segmentation,
                Some(run.level.get()),
            );
            record
                .params
                .insert("genre".into(), serde_json::Value::from(doc.genre.clone()));
            record.params.insert(
                "empty_sets".into(),
                serde_json::Value::from(run.trace.config.empty_sets.to_string()),
            );
            if let Some(mean) = run.trace.mean_difference {
                record.params.insert(
                    "mean_median_difference".into(),
                    serde_json::Value::from(*mean.numer() as f64 / *mean.denom() as f64),
                );
            }
            if let Some(reason) = run.trace.degenerate {
                record.warnings.push(format!("degenerate text: {reason}"));
            }
            record
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BoundaryCount;
    use crate::synthetic::{generate, SyntheticSpec};
    use crate::text::NormalizationConfig;

    fn corpus(n: usize, seed: u64) -> Vec<CorpusDocument> {
        generate(&SyntheticSpec::multi_topic(n, seed), &NormalizationConfig::default())
            .unwrap()
            .into_iter()
            .map(|d| d.corpus)
            .collect()
    }

    #[test]
    fn sweep_orders_by_document_then_level() {
        let docs = corpus(3, 1);
        let runs = segment_corpus(&docs, &LinkLevel::standard_sweep(), EmptySetPolicy::CarryForward);
        assert_eq!(runs.len(), 18);
        for (i, run) in runs.iter().enumerate() {
            assert_eq!(run.doc_index, i / 6);
            assert_eq!(run.level.get() as usize, i % 6 + 1);
        }
    }

    #[test]
    fn evaluation_with_baseline_and_tests() {
        let docs = corpus(8, 2);
        let runs = segment_corpus(&docs, &[LinkLevel::ONE], EmptySetPolicy::CarryForward);
        let records = segmentation_records(&docs, &runs);
        let config = EvaluationConfig {
            window: 0,
            random: Some(RandomTrialConfig::new(100, 7, BoundaryCount::MatchLsm).unwrap()),
            permutations: MIN_PERMUTATIONS,
        };
        let out = evaluate_corpus(&docs, &records, &config).unwrap();
        assert_eq!(out.reports.len(), 8);
        assert_eq!(out.summary.baseline.len(), 8);
        for (b, r) in out.summary.baseline.iter().zip(&out.reports) {
            assert_eq!(b.boundary_count, r.score.inserted_count);
        }
        // one synthetic genre plus `all`, two measures, one level
        assert_eq!(out.summary.significance.len(), 4);
        assert!(out.summary.overall(Method::Random).is_some());

        let again = evaluate_corpus(&docs, &records, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&again.summary).unwrap(),
            serde_json::to_string(&out.summary).unwrap()
        );
    }

    #[test]
    fn unknown_document_is_a_data_error() {
        let docs = corpus(1, 3);
        let mut records = segmentation_records(
            &docs,
            &segment_corpus(&docs, &[LinkLevel::ONE], EmptySetPolicy::CarryForward),
        );
        records[0].doc_id = "nowhere".into();
        match evaluate_corpus(&docs, &records, &EvaluationConfig::default()) {
            Err(Error::Data(msg)) => assert!(msg.contains("nowhere")),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn wider_window_never_scores_lower() {
        let docs = corpus(6, 4);
        let runs = segment_corpus(&docs, &[LinkLevel::ONE, LinkLevel::new(2).unwrap()], EmptySetPolicy::CarryForward);
        let records = segmentation_records(&docs, &runs);
        let exact = evaluate_corpus(&docs, &records, &EvaluationConfig::default()).unwrap();
        let loose = evaluate_corpus(
            &docs,
            &records,
            &EvaluationConfig {
                window: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in exact.reports.iter().zip(&loose.reports) {
            assert!(b.score.matches.len() >= a.score.matches.len());
            assert!(b.score.recall >= a.score.recall);
            assert!(b.score.precision >= a.score.precision);
        }
    }
}
