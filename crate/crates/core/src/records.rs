//! JSON interchange for segmentations.
//!
//! ```json
//! {"doc_id": "guinea", "method": "lsm", "link_level": 2, "sentence_count": 27,
//!  "boundaries": [22, 26], "params": {...}}
//! ```
//!
//! `sentence_count`, `params`, `warnings` and `manifest_hash` may be omitted
//! by external tools.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lsm::{combine, Method, Segmentation};

/// File name of the run manifest written next to outputs; never read as a segmentation.
pub const MANIFEST_FILE: &str = "run-manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub doc_id: String,
    pub method: Method,
    #[serde(default)]
    pub link_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_count: Option<usize>,
    pub boundaries: Vec<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

impl SegmentationRecord {
    pub fn from_segmentation(doc_id: &str, seg: &Segmentation, link_level: Option<u32>) -> Self {
        SegmentationRecord {
            doc_id: doc_id.to_string(),
            method: seg.method(),
            link_level,
            sentence_count: Some(seg.sentence_count()),
            boundaries: seg.boundaries().iter().copied().collect(),
            params: BTreeMap::new(),
            warnings: Vec::new(),
            manifest_hash: None,
        }
    }

    /// Validates the record against a text of `sentence_count` sentences.
    pub fn to_segmentation(&self, sentence_count: usize) -> Result<Segmentation> {
        if let Some(declared) = self.sentence_count {
            if declared != sentence_count {
                return Err(Error::Data(format!(
                    "segmentation of `{}` declares {declared} sentences, the document has {sentence_count}",
                    self.doc_id
                )));
            }
        }
        Segmentation::new(sentence_count, self.boundaries.iter().copied(), self.method).map_err(
            |e| Error::Data(format!("segmentation of `{}`: {e}", self.doc_id)),
        )
    }

    /// Segmentation using the record's own sentence count, or the largest
    /// boundary when none is declared.
    pub fn to_self_segmentation(&self) -> Result<Segmentation> {
        let n = self
            .sentence_count
            .unwrap_or_else(|| self.boundaries.iter().copied().max().unwrap_or(1));
        self.to_segmentation(n)
    }

    /// `<doc_id>.<method>[.L<level>].json`
    pub fn file_name(&self) -> String {
        match self.link_level {
            Some(level) => format!("{}.{}.L{level}.json", self.doc_id, self.method),
            None => format!("{}.{}.json", self.doc_id, self.method),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("records always serialize");
        text.push('\n');
        text
    }
}

/// Reads one record file, or every `*.json` record in a directory (sorted by
/// file name, skipping [`MANIFEST_FILE`]).
pub fn read_records(path: &Path) -> Result<Vec<(PathBuf, SegmentationRecord)>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension().is_some_and(|e| e == "json")
                    && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
            })
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::Data(format!(
            "{}: no segmentation files found",
            path.display()
        )));
    }
    files
        .into_iter()
        .map(|file| {
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let record = serde_json::from_str(&text).map_err(|e| Error::json(&file, e))?;
            Ok((file, record))
        })
        .collect()
}

/// Pairs records of `a` with records of `b` by document and unions their
/// boundaries. When `b` holds several records for a document, the one with
/// the same link level is used.
pub fn combine_records(
    a: &[SegmentationRecord],
    b: &[SegmentationRecord],
) -> Result<Vec<SegmentationRecord>> {
    let mut by_doc: BTreeMap<&str, Vec<&SegmentationRecord>> = BTreeMap::new();
    for record in b {
        by_doc.entry(record.doc_id.as_str()).or_default().push(record);
    }
    let mut combined = Vec::with_capacity(a.len());
    for left in a {
        let candidates = by_doc.get(left.doc_id.as_str()).ok_or_else(|| {
            Error::Data(format!("document `{}` is missing from the second input", left.doc_id))
        })?;
        let right = match candidates.as_slice() {
            [only] => *only,
            many => many
                .iter()
                .copied()
                .find(|r| r.link_level == left.link_level)
                .ok_or_else(|| {
                    Error::Data(format!(
                        "document `{}`: no record at link level {:?} in the second input",
                        left.doc_id, left.link_level
                    ))
                })?,
        };
        let n = match (left.sentence_count, right.sentence_count) {
            (Some(x), Some(y)) if x != y => {
                return Err(Error::Data(format!(
                    "document `{}`: sentence counts differ ({x} vs {y})",
                    left.doc_id
                )))
            }
            (Some(x), _) | (None, Some(x)) => x,
            (None, None) => left
                .boundaries
                .iter()
                .chain(&right.boundaries)
                .copied()
                .max()
                .unwrap_or(1),
        };
        let seg = combine(&left.to_segmentation(n)?, &right.to_segmentation(n)?)?;
        let mut record = SegmentationRecord::from_segmentation(
            &left.doc_id,
            &seg,
            left.link_level.or(right.link_level),
        );
        record.params.insert(
            "sources".into(),
            Value::from(vec![left.method.to_string(), right.method.to_string()]),
        );
        combined.push(record);
    }
    Ok(combined)
}
