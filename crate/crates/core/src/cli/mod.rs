//! `lsm` command-line front end.
//!
//! Subcommands exchange segmentations as JSON files, so each stage can be
//! run on its own: `segment` writes LSM boundaries, `baseline` writes random
//! ones, `combine` unions two sets, and `evaluate` scores any of them against
//! the corpus headings. Exit codes: 0 success, 1 usage, 2 data error.

mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use crate::baselines::{
    derive_seed, random_segmentation_with, trial_rng, BoundaryCount, RandomTrialConfig,
};
use crate::cohesion::{build_link_matrix, LinkLevel};
use crate::error::{Error, Result};
use crate::evaluation::{CorpusSummary, EvalReport, MIN_PERMUTATIONS, PRECISION_READING};
use crate::lsm::{EmptySetPolicy, Method};
use crate::pipeline::{evaluate_corpus, segment_corpus, segmentation_records, EvaluationConfig};
use crate::records::{combine_records, read_records, SegmentationRecord, MANIFEST_FILE};
use crate::text::{load_corpus, load_corpus_lenient, CorpusDocument, NormalizationConfig};

pub use manifest::{BaselineManifest, NormalizationManifest, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lsm", version, about = "Link Set Median text segmentation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment every corpus document at one or more link levels.
    Segment(SegmentArgs),
    /// Score segmentations against section headings, optionally against a random baseline.
    Evaluate(EvaluateArgs),
    /// Union the boundaries of two segmentation sets.
    Combine(CombineArgs),
    /// Write random segmentations.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus directory (`*.txt` files; first-level subdirectories are genres).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Replacement stoplist, one word per line.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// Compare surface forms without stemming.
    #[arg(long)]
    pub no_stem: bool,
    #[arg(long, default_value_t = 2)]
    pub min_token_len: usize,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Link level `N` or inclusive range `N..M`.
    #[arg(long, default_value = "1")]
    pub level: String,
    /// Treatment of sentences without links: carry-forward, zero or exclude.
    #[arg(long, default_value = "carry-forward")]
    pub empty_sets: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Also write each document's link matrix as `<doc>.links.csv`.
    #[arg(long)]
    pub export_links: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Segmentation JSON file or directory.
    #[arg(long)]
    pub segmentations: PathBuf,
    /// Match tolerance in sentences.
    #[arg(long, default_value_t = 0)]
    pub window: usize,
    /// Random trials per LSM segmentation; enables the baseline and p-values.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Fixed random boundary count instead of matching LSM.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = MIN_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Format of the per-document reports; the summary is written as JSON and CSV.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    /// First segmentation file or directory.
    pub first: PathBuf,
    /// Second segmentation file or directory.
    pub second: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// LSM segmentations whose boundary counts the random draws match.
    #[arg(long, conflicts_with = "k", required_unless_present = "k")]
    pub segmentations: Option<PathBuf>,
    /// Fixed boundary count per document.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) | Error::UnknownFormat(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

pub fn execute(command: &Command) -> std::result::Result<(), CliError> {
    match command {
        Command::Segment(args) => cmd_segment(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Combine(args) => cmd_combine(args),
        Command::Baseline(args) => cmd_baseline(args),
    }
}

fn normalization(args: &CorpusArgs) -> Result<NormalizationConfig> {
    let mut config = NormalizationConfig::default()
        .with_stem(!args.no_stem)
        .with_min_token_len(args.min_token_len);
    if let Some(path) = &args.stoplist {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        config = config.with_stoplist(NormalizationConfig::stoplist_from_str(&text));
    }
    Ok(config)
}

fn load(args: &CorpusArgs, config: &NormalizationConfig, lenient: bool) -> Result<Vec<CorpusDocument>> {
    if !args.corpus.is_dir() {
        return Err(Error::Data(format!(
            "{}: corpus directory not found",
            args.corpus.display()
        )));
    }
    if !lenient {
        return load_corpus(&args.corpus, config);
    }
    let loaded = load_corpus_lenient(&args.corpus, config)?;
    for (path, reason) in &loaded.skipped {
        warn!("skipping {}: {reason}", path.display());
        eprintln!("warning: skipping {}: {reason}", path.display());
    }
    if loaded.documents.is_empty() {
        return Err(Error::Data(format!(
            "{}: no usable documents",
            args.corpus.display()
        )));
    }
    Ok(loaded.documents)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write(path, &text)
}

fn cmd_segment(args: &SegmentArgs) -> std::result::Result<(), CliError> {
    let levels = LinkLevel::parse_range(&args.level)?;
    let empty_sets: EmptySetPolicy = args.empty_sets.parse()?;
    let config = normalization(&args.corpus)?;
    let docs = load(&args.corpus, &config, true)?;

    let manifest = RunManifest::new("segment", &args.out)
        .with_corpus(&args.corpus.corpus, &docs)
        .with_normalization(&config)
        .with_levels(&levels)
        .with_empty_sets(empty_sets)
        .with_format(args.format);
    let hash = manifest.sha256();

    let runs = segment_corpus(&docs, &levels, empty_sets);
    let mut records = segmentation_records(&docs, &runs);
    for record in &mut records {
        record.manifest_hash = Some(hash.clone());
        for warning in &record.warnings {
            eprintln!(
                "warning: {} at level {}: {warning}",
                record.doc_id,
                record.link_level.unwrap_or_default()
            );
        }
    }

    prepare_out(&args.out)?;
    match args.format {
        OutputFormat::Json => {
            for record in &records {
                write(&args.out.join(record.file_name()), &record.to_json())?;
            }
        }
        OutputFormat::Csv => {
            let mut csv = format!("# manifest_sha256={hash}\ndoc_id,genre,method,link_level,sentence_count,boundaries\n");
            for (record, run) in records.iter().zip(&runs) {
                let boundaries: Vec<String> = record.boundaries.iter().map(usize::to_string).collect();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    record.doc_id,
                    docs[run.doc_index].genre,
                    record.method,
                    run.level,
                    record.sentence_count.unwrap_or_default(),
                    boundaries.join(";")
                );
            }
            write(&args.out.join("segmentations.csv"), &csv)?;
        }
    }
    if args.export_links {
        for doc in &docs {
            let matrix = build_link_matrix(&doc.document);
            let csv = format!("# manifest_sha256={hash}\n{}", matrix.to_csv());
            write(&args.out.join(format!("{}.links.csv", doc.document.id())), &csv)?;
        }
    }
    write_json(&args.out.join(MANIFEST_FILE), &manifest.with_hash())?;
    Ok(())
}

#[derive(Serialize)]
struct ReportsFile<'a> {
    manifest_sha256: &'a str,
    precision_reading: &'a str,
    reports: &'a [EvalReport],
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    manifest_sha256: &'a str,
    metadata: &'a RunManifest,
    summary: &'a CorpusSummary,
}

fn cmd_evaluate(args: &EvaluateArgs) -> std::result::Result<(), CliError> {
    let config = normalization(&args.corpus)?;
    let docs = load(&args.corpus, &config, true)?;
    let inputs = read_records(&args.segmentations)?;
    let records: Vec<SegmentationRecord> = inputs.iter().map(|(_, r)| r.clone()).collect();

    let random = match args.trials {
        None => None,
        Some(trials) => {
            let count = args.k.map_or(BoundaryCount::MatchLsm, BoundaryCount::Fixed);
            Some(RandomTrialConfig::new(trials, args.seed, count)?)
        }
    };
    if args.permutations < MIN_PERMUTATIONS {
        return Err(CliError::Usage(format!(
            "--permutations must be at least {MIN_PERMUTATIONS}"
        )));
    }

    let mut manifest = RunManifest::new("evaluate", &args.out)
        .with_corpus(&args.corpus.corpus, &docs)
        .with_normalization(&config)
        .with_inputs(&inputs)
        .with_window(args.window)
        .with_format(args.format)
        .with_seed(args.seed);
    if let Some(random) = &random {
        manifest = manifest.with_baseline(random, args.permutations);
    }
    let hash = manifest.sha256();

    let output = evaluate_corpus(
        &docs,
        &records,
        &EvaluationConfig {
            window: args.window,
            random,
            permutations: args.permutations,
        },
    )?;

    prepare_out(&args.out)?;
    match args.format {
        OutputFormat::Json => write_json(
            &args.out.join("reports.json"),
            &ReportsFile {
                manifest_sha256: &hash,
                precision_reading: PRECISION_READING,
                reports: &output.reports,
            },
        )?,
        OutputFormat::Csv => {
            let mut csv = format!(
                "# manifest_sha256={hash}\ndoc_id,genre,method,link_level,window,matches,inserted,reference,recall,precision\n"
            );
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            for r in &output.reports {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.doc_id,
                    r.genre,
                    r.method,
                    r.link_level.map(|l| l.to_string()).unwrap_or_default(),
                    r.window,
                    r.score.matches.len(),
                    r.score.inserted_count,
                    r.score.reference_count,
                    opt(r.score.recall),
                    opt(r.score.precision)
                );
            }
            write(&args.out.join("reports.csv"), &csv)?;
        }
    }
    let manifest = manifest.with_hash();
    write_json(
        &args.out.join("summary.json"),
        &SummaryFile {
            manifest_sha256: &hash,
            metadata: &manifest,
            summary: &output.summary,
        },
    )?;
    write(
        &args.out.join("summary.csv"),
        &format!("# manifest_sha256={hash}\n{}", output.summary.to_table_csv()),
    )?;
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    Ok(())
}

fn cmd_combine(args: &CombineArgs) -> std::result::Result<(), CliError> {
    let first = read_records(&args.first)?;
    let second = read_records(&args.second)?;
    let manifest = RunManifest::new("combine", &args.out)
        .with_inputs(&first)
        .with_more_inputs(&second);
    let hash = manifest.sha256();

    let a: Vec<SegmentationRecord> = first.into_iter().map(|(_, r)| r).collect();
    let b: Vec<SegmentationRecord> = second.into_iter().map(|(_, r)| r).collect();
    let mut combined = combine_records(&a, &b)?;

    prepare_out(&args.out)?;
    for record in &mut combined {
        record.manifest_hash = Some(hash.clone());
        write(&args.out.join(record.file_name()), &record.to_json())?;
    }
    write_json(&args.out.join(MANIFEST_FILE), &manifest.with_hash())?;
    Ok(())
}

fn cmd_baseline(args: &BaselineArgs) -> std::result::Result<(), CliError> {
    let config = normalization(&args.corpus)?;
    let docs = load(&args.corpus, &config, true)?;
    let count = args.k.map_or(BoundaryCount::MatchLsm, BoundaryCount::Fixed);
    let random = RandomTrialConfig::new(args.trials, args.seed, count)?;

    // (doc, link level, boundary count that LSM inserted)
    let mut jobs: Vec<(&CorpusDocument, Option<u32>, usize)> = Vec::new();
    let mut manifest = RunManifest::new("baseline", &args.out)
        .with_corpus(&args.corpus.corpus, &docs)
        .with_normalization(&config)
        .with_seed(args.seed);
    match &args.segmentations {
        Some(path) => {
            let inputs = read_records(path)?;
            manifest = manifest.with_inputs(&inputs);
            for (_, record) in inputs.iter().filter(|(_, r)| r.method == Method::Lsm) {
                let doc = docs
                    .iter()
                    .find(|d| d.document.id() == record.doc_id)
                    .ok_or_else(|| {
                        Error::Data(format!(
                            "segmentation names document `{}`, which is not in the corpus",
                            record.doc_id
                        ))
                    })?;
                let seg = record.to_segmentation(doc.document.len())?;
                jobs.push((doc, record.link_level, seg.boundaries().len()));
            }
        }
        None => jobs.extend(docs.iter().map(|d| (d, None, 0))),
    }
    manifest = manifest.with_baseline(&random, 0);
    let hash = manifest.sha256();

    prepare_out(&args.out)?;
    for (doc, level, lsm_count) in jobs {
        let n = doc.document.len();
        let k = count.resolve(lsm_count, n);
        let label = match level {
            Some(level) => format!("{}/L{level}", doc.document.id()),
            None => doc.document.id().to_string(),
        };
        let seed = derive_seed(args.seed, &label);
        for trial in 0..random.trials() as u64 {
            let seg = random_segmentation_with(n, k, &mut trial_rng(seed, trial))?;
            let mut record = SegmentationRecord::from_segmentation(doc.document.id(), &seg, level);
            record.params.insert("seed".into(), seed.into());
            record.params.insert("trial".into(), trial.into());
            record.params.insert("genre".into(), doc.genre.clone().into());
            record.manifest_hash = Some(hash.clone());
            let name = match level {
                Some(level) => format!("{}.random.L{level}.t{trial}.json", doc.document.id()),
                None => format!("{}.random.t{trial}.json", doc.document.id()),
            };
            write(&args.out.join(name), &record.to_json())?;
        }
    }
    write_json(&args.out.join(MANIFEST_FILE), &manifest.with_hash())?;
    Ok(())
}
