//! Acceptance suite. Run with `cargo test --test acceptance`; prints one
//! `[PASS]`/`[FAIL]` line per criterion and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use lsm_core::baselines::{random_segmentation, random_trial_scores, sample_trials, BoundaryCount, RandomTrialConfig};
use lsm_core::cohesion::{build_link_matrix, build_link_sets, LinkLevel, LinkMatrix};
use lsm_core::evaluation::{score, Measure, ReferenceSegments, ALL_GENRES};
use lsm_core::lsm::{
    combine, median, place_boundaries, segment, segment_matrix, EmptySetPolicy, LsmConfig, MedianDifferences,
    Method, Rational, Segmentation,
};
use lsm_core::pipeline::{evaluate_corpus, segment_corpus, segmentation_records, EvaluationConfig};
use lsm_core::synthetic::{generate, SyntheticSpec};
use lsm_core::text::{Document, NormalizationConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn doc(sentences: &[&str]) -> Document {
    Document::new("fixture", sentences, vec![], &NormalizationConfig::default()).unwrap()
}

// 1 ---------------------------------------------------------------------------

fn worked_link_set() -> Outcome {
    // sentence 1 shares three types with sentence 6 and two with sentence 4
    let d = doc(&[
        "cacao timber yams bananas millet",
        "franc",
        "currency",
        "bananas millet",
        "dollar",
        "cacao timber yams",
        "party",
    ]);
    let matrix = build_link_matrix(&d);
    let at = |level: u32| build_link_sets(&matrix, LinkLevel::new(level).unwrap())[0].entries.clone();
    let (l1, l3) = (at(1), at(3));
    check(l1 == [4, 4, 6, 6, 6], || format!("level 1 set {l1:?}"))?;
    check(l3 == [6, 6, 6], || format!("level 3 set {l3:?}"))?;
    let six = Some(Rational::from_integer(6));
    check(median(&l1) == six && median(&l3) == six, || "median is not 6".into())?;
    Ok(format!("L1 {l1:?}, L3 {l3:?}, median 6"))
}

// 2 ---------------------------------------------------------------------------

fn excerpt_scoring() -> Outcome {
    let inserted = Segmentation::new(27, [22, 26], Method::Lsm).unwrap();
    let reference = ReferenceSegments::new(27, [26]).unwrap();
    let s = score(&inserted, &reference, 0);
    check(s.matches.len() == 1, || format!("{} matches", s.matches.len()))?;
    check(s.recall == Some(1.0), || format!("recall {:?}", s.recall))?;
    check(s.precision == Some(0.5), || format!("precision {:?}", s.precision))?;
    Ok("1 match, recall 1.0, precision 0.5".into())
}

// 3 ---------------------------------------------------------------------------

fn synthetic_beats_random() -> Outcome {
    let config = NormalizationConfig::default();
    let docs: Vec<_> = generate(&SyntheticSpec::multi_topic(50, 2024), &config)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|d| d.corpus)
        .collect();
    let runs = segment_corpus(&docs, &[LinkLevel::ONE], EmptySetPolicy::default());
    let records = segmentation_records(&docs, &runs);
    let out = evaluate_corpus(
        &docs,
        &records,
        &EvaluationConfig {
            window: 0,
            random: Some(RandomTrialConfig::new(1000, 7, BoundaryCount::MatchLsm).unwrap()),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;

    let mut detail = Vec::new();
    for measure in [Measure::Recall, Measure::Precision] {
        let cell = out
            .summary
            .significance
            .iter()
            .find(|t| t.measure == measure && t.genre == ALL_GENRES && t.link_level == Some(1))
            .ok_or("no significance cell")?;
        check(cell.lsm_mean > cell.random_mean && cell.p_value < 0.01, || {
            format!(
                "{measure:?}: LSM {:.3} vs random {:.3}, p = {}",
                cell.lsm_mean, cell.random_mean, cell.p_value
            )
        })?;
        detail.push(format!(
            "{measure:?} {:.3} vs {:.3} (p = {:.5})",
            cell.lsm_mean, cell.random_mean, cell.p_value
        ));
    }
    Ok(detail.join("; "))
}

// 4 ---------------------------------------------------------------------------

fn single_seam_recovery() -> Outcome {
    let config = NormalizationConfig::default();
    let docs = generate(&SyntheticSpec::single_seam(100, 99), &config).map_err(|e| e.to_string())?;
    let found = docs
        .iter()
        .filter(|d| {
            let seam = *d.seams.iter().next().unwrap();
            segment(&d.corpus.document, LinkLevel::ONE).boundaries().contains(&seam)
        })
        .count();
    check(found >= 90, || format!("seam found in {found}/100"))?;
    Ok(format!("seam found in {found}/100"))
}

// 5 ---------------------------------------------------------------------------

const VOCABULARY: &[&str] = &[
    "cacao", "Cacao", "coffee", "timber", "island", "islands", "grow", "grows", "franc", "francs", "the", "of",
    "is", "a", "dollar", "elected", "election",
];

fn random_document() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::collection::vec(prop::sample::select(VOCABULARY), 1..=6).prop_map(|w| w.join(" ")),
        2..=8,
    )
}

/// Count of a pair as the size of the multiset intersection of their
/// normalized lexical tokens, by pairwise removal.
fn oracle_links(doc: &Document) -> BTreeMap<(usize, usize), u32> {
    let bags: Vec<Vec<String>> = doc
        .sentences()
        .iter()
        .map(|s| s.tokens.iter().filter(|t| t.is_lexical).map(|t| t.normalized.clone()).collect())
        .collect();
    let mut out = BTreeMap::new();
    for i in 0..bags.len() {
        for j in i + 1..bags.len() {
            let mut rest = bags[j].clone();
            let mut shared = 0;
            for word in &bags[i] {
                if let Some(pos) = rest.iter().position(|w| w == word) {
                    rest.swap_remove(pos);
                    shared += 1;
                }
            }
            out.insert((i + 1, j + 1), shared);
        }
    }
    out
}

/// The whole procedure in doubled integers: link sets from the oracle
/// counts, doubled medians, carry-forward (or zero-fill), absolute
/// differences, and `d > sum / count` as `d * count > sum`.
fn oracle_boundaries(n: usize, links: &BTreeMap<(usize, usize), u32>, level: u32, zero_fill: bool) -> BTreeSet<usize> {
    let count = |i: usize, j: usize| links[&(i.min(j), i.max(j))];
    let mut medians2: Vec<Option<i64>> = Vec::new();
    for i in 1..=n {
        let mut set = Vec::new();
        for j in (1..=n).filter(|&j| j != i) {
            if count(i, j) >= level {
                for _ in 0..count(i, j) {
                    set.push(j as i64);
                }
            }
        }
        set.sort();
        let m = match set.len() {
            0 => None,
            len if len % 2 == 1 => Some(2 * set[len / 2]),
            len => Some(set[len / 2 - 1] + set[len / 2]),
        };
        medians2.push(m);
    }
    let mut last = None;
    let effective: Vec<Option<i64>> = medians2
        .iter()
        .map(|m| {
            if zero_fill {
                Some(m.unwrap_or(0))
            } else {
                last = m.or(last);
                last
            }
        })
        .collect();
    let mut diffs = Vec::new();
    for s in 2..=n {
        if let (Some(a), Some(b)) = (effective[s - 2], effective[s - 1]) {
            diffs.push((s, (a - b).abs()));
        }
    }
    let sum: i64 = diffs.iter().map(|d| d.1).sum();
    let len = diffs.len() as i64;
    diffs.into_iter().filter(|&(_, d)| len > 0 && d * len > sum).map(|(s, _)| s).collect()
}

fn oracle_agreement() -> Outcome {
    let config = NormalizationConfig::default();
    let mut runner = TestRunner::new_with_rng(
        Config { cases: 200, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let result = runner.run(&random_document(), |sentences| {
        let d = Document::new("r", &sentences, vec![], &config).unwrap();
        let n = d.len();
        let matrix = build_link_matrix(&d);
        let links = oracle_links(&d);
        for (&(i, j), &c) in &links {
            prop_assert_eq!(matrix.get(i, j), c, "pair {}-{}", i, j);
        }
        for level in 1..=3 {
            for (policy, zero) in [(EmptySetPolicy::CarryForward, false), (EmptySetPolicy::Zero, true)] {
                let trace = segment_matrix(&matrix, LsmConfig { level: LinkLevel::new(level).unwrap(), empty_sets: policy });
                let expected = oracle_boundaries(n, &links, level, zero);
                prop_assert_eq!(trace.segmentation.boundaries(), &expected, "level {} {:?}", level, policy);
            }
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok("200 documents agree with both oracles".into())
}

// 6 ---------------------------------------------------------------------------

fn random_baseline_expectation() -> Outcome {
    let trials = 100_000;
    let reference = ReferenceSegments::new(5, [3]).unwrap();
    let config = RandomTrialConfig::new(trials, 6, BoundaryCount::Fixed(1)).unwrap();
    let scores = random_trial_scores(&reference, 1, &config, 0).map_err(|e| e.to_string())?;
    let mean = scores.iter().map(|s| s.recall.unwrap()).sum::<f64>() / trials as f64;
    let sigma = (0.25f64 * 0.75 / trials as f64).sqrt();
    check((mean - 0.25).abs() <= 3.0 * sigma, || format!("mean recall {mean:.5}, 3σ = {:.5}", 3.0 * sigma))?;
    Ok(format!("mean recall {mean:.5} (|Δ| ≤ 3σ = {:.5})", 3.0 * sigma))
}

// 7 ---------------------------------------------------------------------------

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases: 1000, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn segmentation_pair() -> impl Strategy<Value = (usize, BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)> {
    (3usize..40).prop_flat_map(|n| {
        let set = prop::collection::btree_set(2..=n, 0..n.min(8));
        (Just(n), set.clone(), set.clone(), set)
    })
}

fn properties() -> Outcome {
    let config = NormalizationConfig::default();
    let build = |s: &Vec<String>| Document::new("p", s, vec![], &config).unwrap();
    let mut passed = Vec::new();
    let mut run = |name: &str, result: Result<(), String>| -> Result<(), String> {
        result.map_err(|e| format!("{name}: {e}"))?;
        passed.push(name.to_string());
        Ok(())
    };

    run(
        "link symmetry",
        runner()
            .run(&random_document(), |s| {
                let d = build(&s);
                let m = build_link_matrix(&d);
                for i in 1..=d.len() {
                    for j in (1..=d.len()).filter(|&j| j != i) {
                        prop_assert_eq!(m.get(i, j), m.get(j, i));
                        prop_assert_eq!(
                            lsm_core::cohesion::count_links(d.sentence(i).unwrap(), d.sentence(j).unwrap()),
                            lsm_core::cohesion::count_links(d.sentence(j).unwrap(), d.sentence(i).unwrap())
                        );
                    }
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "link-level monotonicity",
        runner()
            .run(&random_document(), |s| {
                let m = build_link_matrix(&build(&s));
                for level in 1..6 {
                    let low = build_link_sets(&m, LinkLevel::new(level).unwrap());
                    let high = build_link_sets(&m, LinkLevel::new(level + 1).unwrap());
                    for (a, b) in low.iter().zip(&high) {
                        for partner in &b.entries {
                            prop_assert!(b.multiplicity(*partner) <= a.multiplicity(*partner));
                        }
                        prop_assert!(b.len() <= a.len());
                    }
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    let matrix_strategy = (2usize..30).prop_flat_map(|n| {
        (Just(n), prop::collection::vec(0u32..4, n * (n - 1) / 2), 1u32..5)
    });
    run(
        "boundaries within 2..=n",
        runner()
            .run(&matrix_strategy, |(n, counts, level)| {
                let mut pairs = Vec::new();
                let mut it = counts.into_iter();
                for i in 1..=n {
                    for j in i + 1..=n {
                        pairs.push((i, j, it.next().unwrap()));
                    }
                }
                let m = LinkMatrix::from_counts(n, pairs);
                for policy in [EmptySetPolicy::CarryForward, EmptySetPolicy::Zero, EmptySetPolicy::Exclude] {
                    let trace = segment_matrix(&m, LsmConfig { level: LinkLevel::new(level).unwrap(), empty_sets: policy });
                    prop_assert!(trace.segmentation.boundaries().iter().all(|&b| (2..=n).contains(&b)));
                    prop_assert!(trace.segmentation.boundaries().len() < n);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "no boundary under constant differences",
        runner()
            .run(&(2usize..60, 0u64..20, 1u64..3, prop::collection::vec(any::<bool>(), 59)), |(n, num, den, gaps)| {
                let c = Rational::new(num, den);
                // undefined entries do not enter the mean, so gaps keep it constant
                let diffs = MedianDifferences {
                    diffs: (0..n - 1).map(|k| (!gaps[k]).then_some(c)).collect(),
                };
                prop_assert!(place_boundaries(&diffs).is_empty());
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "combine laws",
        runner()
            .run(&segmentation_pair(), |(n, a, b, r)| {
                let sa = Segmentation::new(n, a.iter().copied(), Method::Lsm).unwrap();
                let sb = Segmentation::new(n, b.iter().copied(), Method::External).unwrap();
                let ab = combine(&sa, &sb).unwrap();
                let ba = combine(&sb, &sa).unwrap();
                prop_assert_eq!(ab.boundaries(), ba.boundaries());
                let aa = combine(&sa, &sa).unwrap();
                prop_assert_eq!(aa.boundaries(), sa.boundaries());
                let abab = combine(&ab, &ab).unwrap();
                prop_assert_eq!(abab.boundaries(), ab.boundaries());
                let reference = ReferenceSegments::new(n, r.iter().copied()).unwrap();
                for window in 0..3 {
                    let rc = score(&ab, &reference, window).recall;
                    prop_assert!(rc >= score(&sa, &reference, window).recall);
                    prop_assert!(rc >= score(&sb, &reference, window).recall);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "determinism under a fixed seed",
        runner()
            .run(&(2usize..50, any::<u64>(), random_document()), |(n, seed, s)| {
                let k = (seed as usize) % n;
                prop_assert_eq!(random_segmentation(n, k, seed).unwrap(), random_segmentation(n, k, seed).unwrap());
                let config = RandomTrialConfig::new(5, seed, BoundaryCount::Fixed(k)).unwrap();
                prop_assert_eq!(sample_trials(n, k, &config).unwrap(), sample_trials(n, k, &config).unwrap());
                let d = build(&s);
                prop_assert_eq!(segment(&d, LinkLevel::ONE), segment(&build(&s), LinkLevel::ONE));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    Ok(format!("{} properties × 1000 cases: {}", passed.len(), passed.join(", ")))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("worked link set {4,4,6,6,6} / {6,6,6}", 1, worked_link_set),
        ("excerpt scoring {22,26} vs {26}", 1, excerpt_scoring),
        ("synthetic corpus: LSM beats random (p < 0.01)", 60, synthetic_beats_random),
        ("single-seam recovery ≥ 90%", 30, single_seam_recovery),
        ("link matrix and boundaries match oracles", 10, oracle_agreement),
        ("random baseline expectation n=5 k=1", 10, random_baseline_expectation),
        ("property suite", 600, properties),
    ];
    let mut failures = 0;
    for (number, (name, limit, criterion)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = criterion();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit} s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail} ({elapsed:.2?})", number + 1),
            Err(why) => {
                failures += 1;
                println!("[FAIL] {} {name}: {why} ({elapsed:.2?})", number + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
