use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{tokenize, NormalizationConfig, Token};

/// Genre assigned to documents that sit directly in the corpus root.
pub const DEFAULT_GENRE: &str = "default";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// 1-based position in the document.
    pub index: usize,
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Normalized lexical items with their occurrence counts.
    pub fn lexical_counts(&self) -> BTreeMap<&str, u32> {
        let mut counts = BTreeMap::new();
        for token in self.tokens.iter().filter(|t| t.is_lexical) {
            *counts.entry(token.normalized.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heading {
    /// Index of the first sentence of the section this heading opens.
    pub position: usize,
    pub title: String,
}

/// A tokenized text with its orthographic section headings.
///
/// Always holds at least two sentences, indexed consecutively from 1, and every
/// heading points at one of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    sentences: Vec<Sentence>,
    headings: Vec<Heading>,
}

impl Document {
    pub fn new<S: AsRef<str>>(
        id: impl Into<String>,
        sentences: &[S],
        headings: Vec<Heading>,
        config: &NormalizationConfig,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |message: String| Error::InvalidDocument {
            doc_id: id.clone(),
            message,
        };
        if sentences.len() < 2 {
            return Err(invalid(format!(
                "a document needs at least 2 sentences, found {}",
                sentences.len()
            )));
        }
        let mut built = Vec::with_capacity(sentences.len());
        for (offset, raw) in sentences.iter().enumerate() {
            let raw = raw.as_ref().trim();
            if raw.is_empty() || raw.starts_with('#') || raw.contains('\n') {
                return Err(invalid(format!(
                    "sentence {} cannot be written as a corpus line: {raw:?}",
                    offset + 1
                )));
            }
            built.push(Sentence {
                index: offset + 1,
                raw: raw.to_string(),
                tokens: tokenize(raw, config),
            });
        }
        for heading in &headings {
            if heading.position == 0 || heading.position > built.len() {
                return Err(invalid(format!(
                    "heading {:?} points at sentence {}, outside 1..={}",
                    heading.title,
                    heading.position,
                    built.len()
                )));
            }
            if heading.title.trim().is_empty() || heading.title.contains('\n') {
                return Err(invalid("heading titles must be a single non-empty line".into()));
            }
        }
        let mut headings = headings;
        headings.sort_by_key(|h| h.position);
        Ok(Document {
            id,
            sentences: built,
            headings,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Sentence by 1-based index.
    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        index.checked_sub(1).and_then(|i| self.sentences.get(i))
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn headings(&self) -> &[Heading] {
        &self.headings
    }

    pub fn heading_positions(&self) -> BTreeSet<usize> {
        self.headings.iter().map(|h| h.position).collect()
    }

    /// Writes the document back in the line corpus format.
    pub fn to_corpus_format(&self) -> String {
        let mut out = String::new();
        let mut headings = self.headings.iter().peekable();
        for sentence in &self.sentences {
            while let Some(h) = headings.next_if(|h| h.position == sentence.index) {
                out.push_str("## ");
                out.push_str(h.title.trim());
                out.push('\n');
            }
            out.push_str(&sentence.raw);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// One sentence per line, `## ` headings, `# ` comments, blank lines ignored.
    #[default]
    Lines,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" | "lsm-lines" => Ok(CorpusFormat::Lines),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusFormat::Lines => f.write_str("lines"),
        }
    }
}

/// Parses a document from `source`. Heading lines mark a position and are not
/// sentences themselves.
pub fn parse_document<R: Read>(
    mut source: R,
    id: &str,
    format: CorpusFormat,
    config: &NormalizationConfig,
) -> Result<Document> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::io(id, e))?;
    match format {
        CorpusFormat::Lines => parse_lines(&text, id, config),
    }
}

fn parse_lines(text: &str, id: &str, config: &NormalizationConfig) -> Result<Document> {
    let parse_error = |line: usize, message: String| Error::Parse {
        source_name: id.to_string(),
        line,
        message,
    };

    let mut sentences: Vec<&str> = Vec::new();
    let mut headings = Vec::new();
    // (line number, title) of headings waiting for their first sentence
    let mut pending: Vec<(usize, String)> = Vec::new();

    for (offset, line) in text.lines().enumerate() {
        let line_no = offset + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(title) = line.strip_prefix("## ") {
            let title = title.trim();
            if title.is_empty() {
                return Err(parse_error(line_no, "heading without a title".into()));
            }
            pending.push((line_no, title.to_string()));
        } else if line == "#" || line.starts_with("# ") {
            continue;
        } else if line.starts_with('#') {
            return Err(parse_error(
                line_no,
                format!("unrecognized markup {line:?}; expected `## heading` or `# comment`"),
            ));
        } else {
            sentences.push(line);
            let position = sentences.len();
            headings.extend(
                pending
                    .drain(..)
                    .map(|(_, title)| Heading { position, title }),
            );
        }
    }
    if let Some((line_no, title)) = pending.first() {
        return Err(parse_error(
            *line_no,
            format!("heading {title:?} is not followed by any sentence"),
        ));
    }
    Document::new(id, &sentences, headings, config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDocument {
    pub genre: String,
    pub document: Document,
}

/// Loads every `*.txt` file under `root`. Files in the root itself get
/// [`DEFAULT_GENRE`]; files in a first-level subdirectory take that
/// directory's name as their genre. Document ids are file stems and must be
/// unique across the corpus. Results are ordered by (genre, id).
pub fn load_corpus(root: &Path, config: &NormalizationConfig) -> Result<Vec<CorpusDocument>> {
    let loaded = load_corpus_lenient(root, config)?;
    match loaded.skipped.into_iter().next() {
        Some((_, error)) => Err(error),
        None => Ok(loaded.documents),
    }
}

#[derive(Debug)]
pub struct LoadedCorpus {
    pub documents: Vec<CorpusDocument>,
    /// Files that parsed but do not form a valid document (too few sentences).
    pub skipped: Vec<(std::path::PathBuf, Error)>,
}

/// Like [`load_corpus`], but documents with too few sentences are set aside
/// instead of failing the load. Markup errors still fail.
pub fn load_corpus_lenient(root: &Path, config: &NormalizationConfig) -> Result<LoadedCorpus> {
    let mut files = Vec::new();
    for entry in read_dir_sorted(root)? {
        if entry.is_dir() {
            let genre = file_name(&entry);
            for inner in read_dir_sorted(&entry)? {
                if is_corpus_file(&inner) {
                    files.push((genre.clone(), inner));
                }
            }
        } else if is_corpus_file(&entry) {
            files.push((DEFAULT_GENRE.to_string(), entry));
        }
    }
    if files.is_empty() {
        return Err(Error::Data(format!(
            "{}: no corpus files (*.txt) found",
            root.display()
        )));
    }

    let mut seen = BTreeMap::new();
    let mut docs = Vec::with_capacity(files.len());
    let mut skipped = Vec::new();
    for (genre, path) in files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(previous) = seen.insert(id.clone(), path.clone()) {
            return Err(Error::Data(format!(
                "duplicate document id `{id}`: {} and {}",
                previous.display(),
                path.display()
            )));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        match parse_lines(&text, &id, config) {
            Ok(document) => docs.push(CorpusDocument { genre, document }),
            Err(Error::Parse { line, message, .. }) => {
                return Err(Error::Parse {
                    source_name: path.display().to_string(),
                    line,
                    message,
                })
            }
            Err(invalid @ Error::InvalidDocument { .. }) => skipped.push((path, invalid)),
            Err(other) => return Err(other),
        }
    }
    docs.sort_by(|a, b| (&a.genre, a.document.id()).cmp(&(&b.genre, b.document.id())));
    Ok(LoadedCorpus {
        documents: docs,
        skipped,
    })
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn is_corpus_file(path: &Path) -> bool {
    path.is_file()
        && path.extension().is_some_and(|ext| ext == "txt")
        && !file_name(path).starts_with('.')
}
