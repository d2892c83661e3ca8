//! Random segmentation baseline.
//!
//! Boundaries are drawn uniformly without replacement from `2..=n`. Every
//! trial owns a ChaCha8 stream selected by its trial index, so a trial's
//! boundaries depend only on `(seed, trial)` and not on how trials are
//! scheduled across threads.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{score_sets, BoundaryScore, DocumentScore, ReferenceSegments};
use crate::lsm::{Method, Segmentation};

/// Generator and sampling scheme, recorded in every report.
pub const RANDOM_ALGORITHM: &str = "chacha8 (stream = trial index), uniform k-subset of 2..=n";

/// Generator for trial `stream` under `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable sub-seed for a labelled unit of work (a document, a test cell).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(label.as_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCount {
    /// As many boundaries as LSM inserted in the same document.
    #[default]
    MatchLsm,
    Fixed(usize),
}

impl BoundaryCount {
    /// Boundary count for a text of `n` sentences, capped at `n - 1`.
    pub fn resolve(self, lsm_count: usize, n: usize) -> usize {
        let k = match self {
            BoundaryCount::MatchLsm => lsm_count,
            BoundaryCount::Fixed(k) => k,
        };
        k.min(n.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTrialConfig {
    trials: usize,
    seed: u64,
    boundary_count: BoundaryCount,
}

impl RandomTrialConfig {
    pub fn new(trials: usize, seed: u64, boundary_count: BoundaryCount) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("at least one random trial is required".into()));
        }
        Ok(RandomTrialConfig {
            trials,
            seed,
            boundary_count,
        })
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn boundary_count(&self) -> BoundaryCount {
        self.boundary_count
    }

    /// Same settings with a different seed.
    pub fn reseeded(self, seed: u64) -> Self {
        RandomTrialConfig { seed, ..self }
    }
}

pub fn random_segmentation_with<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Segmentation> {
    let candidates = n.saturating_sub(1);
    if k > candidates {
        return Err(Error::InvalidArgument(format!(
            "cannot place {k} boundaries in a text of {n} sentences"
        )));
    }
    let boundaries = index::sample(rng, candidates, k).into_iter().map(|i| i + 2);
    Segmentation::new(n, boundaries, Method::Random)
}

/// `k` distinct boundaries drawn uniformly from `2..=n`, reproducible from `seed`.
pub fn random_segmentation(n: usize, k: usize, seed: u64) -> Result<Segmentation> {
    random_segmentation_with(n, k, &mut trial_rng(seed, 0))
}

/// Scores of `config.trials()` independent random segmentations with `k`
/// boundaries each, in trial order.
pub fn random_trial_scores(
    reference: &ReferenceSegments,
    k: usize,
    config: &RandomTrialConfig,
    window: usize,
) -> Result<Vec<BoundaryScore>> {
    let n = reference.sentence_count();
    if k > n.saturating_sub(1) {
        return Err(Error::InvalidArgument(format!(
            "cannot place {k} boundaries in a text of {n} sentences"
        )));
    }
    (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seg = random_segmentation_with(n, k, &mut trial_rng(config.seed, trial))?;
            Ok(score_sets(seg.boundaries(), reference.positions(), window))
        })
        .collect()
}

/// Random-baseline outcome for one document at one link level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub doc_id: String,
    pub genre: String,
    pub link_level: Option<u32>,
    pub boundary_count: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean_recall: Option<f64>,
    pub sd_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub sd_precision: Option<f64>,
}

fn mean_sd(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    let values: Vec<f64> = values.collect();
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

impl BaselineReport {
    pub fn from_trials(
        doc_id: &str,
        genre: &str,
        link_level: Option<u32>,
        boundary_count: usize,
        seed: u64,
        scores: &[BoundaryScore],
    ) -> Self {
        let (mean_recall, sd_recall) = mean_sd(scores.iter().filter_map(|s| s.recall));
        let (mean_precision, sd_precision) = mean_sd(scores.iter().filter_map(|s| s.precision));
        BaselineReport {
            doc_id: doc_id.to_string(),
            genre: genre.to_string(),
            link_level,
            boundary_count,
            trials: scores.len(),
            seed,
            mean_recall,
            sd_recall,
            mean_precision,
            sd_precision,
        }
    }
}

impl DocumentScore for BaselineReport {
    fn method(&self) -> Method {
        Method::Random
    }
    fn genre(&self) -> &str {
        &self.genre
    }
    fn link_level(&self) -> Option<u32> {
        self.link_level
    }
    fn recall(&self) -> Option<f64> {
        self.mean_recall
    }
    fn precision(&self) -> Option<f64> {
        self.mean_precision
    }
}

/// Every boundary set drawn in trials `0..trials`, for inspection and export.
pub fn sample_trials(n: usize, k: usize, config: &RandomTrialConfig) -> Result<Vec<BTreeSet<usize>>> {
    (0..config.trials as u64)
        .map(|t| {
            random_segmentation_with(n, k, &mut trial_rng(config.seed, t))
                .map(|s| s.boundaries().clone())
        })
        .collect()
}
