//! Run manifest: every parameter that can change an output, hashed so that
//! each output file can carry the hash of the run that produced it.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::OutputFormat;
use crate::baselines::{RandomTrialConfig, RANDOM_ALGORITHM};
use crate::cohesion::{LinkLevel, LINK_CONVENTION};
use crate::evaluation::PRECISION_READING;
use crate::lsm::EmptySetPolicy;
use crate::records::SegmentationRecord;
use crate::text::{hex, CorpusDocument, NormalizationConfig};

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationManifest {
    pub stem: bool,
    pub case_fold: bool,
    pub min_token_len: usize,
    pub stoplist_words: usize,
    pub stoplist_sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineManifest {
    pub trials: usize,
    pub seed: u64,
    pub boundary_count: crate::baselines::BoundaryCount,
    pub algorithm: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputManifest {
    pub file: String,
    pub doc_id: String,
    pub sha256: String,
}

/// The output directory is deliberately left out, so identical runs written
/// to different places carry the same hash.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub documents: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputManifest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationManifest>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub link_levels: Vec<u32>,
    pub link_convention: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empty_sets: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineManifest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    pub precision_reading: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_sha256: Option<String>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunManifest {
    pub fn new(command: &str, out: &Path) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            corpus: None,
            corpus_sha256: None,
            documents: None,
            inputs: Vec::new(),
            normalization: None,
            link_levels: Vec::new(),
            link_convention: LINK_CONVENTION,
            empty_sets: None,
            window: None,
            baseline: None,
            seed: None,
            format: None,
            precision_reading: PRECISION_READING,
            manifest_sha256: None,
            out: out.to_path_buf(),
        }
    }

    /// Records the corpus path and a digest of its parsed content (genre,
    /// id, sentences and headings of every document, in load order).
    pub fn with_corpus(mut self, path: &Path, docs: &[CorpusDocument]) -> Self {
        let mut hasher = Sha256::new();
        for doc in docs {
            hasher.update(doc.genre.as_bytes());
            hasher.update([0]);
            hasher.update(doc.document.id().as_bytes());
            hasher.update([0]);
            hasher.update(doc.document.to_corpus_format().as_bytes());
            hasher.update([0]);
        }
        self.corpus = Some(path.display().to_string());
        self.corpus_sha256 = Some(hex(&hasher.finalize()));
        self.documents = Some(docs.len());
        self
    }

    pub fn with_normalization(mut self, config: &NormalizationConfig) -> Self {
        self.normalization = Some(NormalizationManifest {
            stem: config.stem(),
            case_fold: config.case_fold(),
            min_token_len: config.min_token_len(),
            stoplist_words: config.stoplist().len(),
            stoplist_sha256: config.stoplist_digest(),
        });
        self
    }

    pub fn with_levels(mut self, levels: &[LinkLevel]) -> Self {
        self.link_levels = levels.iter().map(|l| l.get()).collect();
        self
    }

    pub fn with_empty_sets(mut self, policy: EmptySetPolicy) -> Self {
        self.empty_sets = Some(policy.to_string());
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = Some(window);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_format(mut self, format: OutputFormat) -> Self {
        self.format = Some(format);
        self
    }

    /// `permutations` of 0 means no significance tests were run.
    pub fn with_baseline(mut self, config: &RandomTrialConfig, permutations: usize) -> Self {
        self.baseline = Some(BaselineManifest {
            trials: config.trials(),
            seed: config.seed(),
            boundary_count: config.boundary_count(),
            algorithm: RANDOM_ALGORITHM,
            permutations: (permutations > 0).then_some(permutations),
        });
        self
    }

    pub fn with_inputs(mut self, inputs: &[(PathBuf, SegmentationRecord)]) -> Self {
        self.inputs.clear();
        self.with_more_inputs(inputs)
    }

    pub fn with_more_inputs(mut self, inputs: &[(PathBuf, SegmentationRecord)]) -> Self {
        self.inputs.extend(inputs.iter().map(|(path, record)| InputManifest {
            file: path
                .file_name()
                .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            doc_id: record.doc_id.clone(),
            sha256: hex(&Sha256::digest(record.to_json().as_bytes())),
        }));
        self
    }

    /// SHA-256 of the manifest JSON without its own hash field.
    pub fn sha256(&self) -> String {
        let mut bare = self.clone();
        bare.manifest_sha256 = None;
        let json = serde_json::to_string(&bare).expect("manifest always serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    /// The manifest with its hash filled in, as written to disk.
    pub fn with_hash(mut self) -> Self {
        self.manifest_sha256 = Some(self.sha256());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_location_and_itself() {
        let a = RunManifest::new("segment", Path::new("/tmp/a")).with_window(1);
        let b = RunManifest::new("segment", Path::new("/tmp/b")).with_window(1);
        assert_eq!(a.sha256(), b.sha256());
        let hashed = a.clone().with_hash();
        assert_eq!(hashed.sha256(), a.sha256());
        assert_ne!(a.sha256(), a.with_window(2).sha256());
    }
}
