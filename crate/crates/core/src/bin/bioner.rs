//! `bioner` command-line driver.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors. Logs go
//! to standard error; data goes to `--output` files or standard output.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Deserialize;

use bioner::error::{Error, Result};
use bioner::eval::evaluate_corpus;
use bioner::head::{train, HashFeaturizer, HeadFile, HeadTagger, TrainConfig, TrainingExample};
use bioner::model::{read_corpus, read_corpus_lenient, write_corpus, Document, Section};
use bioner::ontology::{NormalizationPolicy, SourceFormat, SynonymIndex};
use bioner::pipeline::{bench, run, DictionaryStep, Pipeline, PipelineConfig, RunOptions};
use bioner::tagio::{
    conll_to_targets, decode, encode, parse_conll, read_prob_records, tokenize, tokens_from_words, write_conll,
    write_prob_records, LabelMode, LabelSpace, ProbRecord, TagSchema, TargetSequence, DEFAULT_CLASSES,
};
use bioner::weak::{self, adjacency_stats, corpus_stats, document_stats, BuildConfig};

const FORMATS: &str = "\
File formats:
  corpus      JSON lines: {\"doc_id\", \"sections\": [{\"name\", \"text\", \"entities\": [{\"spans\": [[s,e],...], \"class\", \"confidence\"}]}]}
  conll       token<TAB>tag per line, blank line between sentences
  probs       JSON lines: {\"tokens\": [...], \"probs\": [[label vector per token]]}, labels in label-space order
  weak        JSON lines: {\"doc_id\", \"tokens\", \"targets\", \"mode\"}
  head        JSON: {\"d\", \"labels\", \"W\", \"b\", \"featurizer\", \"threshold\"}
  ontology    JSON lines {\"term_id\", \"default_label\", \"synonyms\", \"class\"} or TSV (id, label, synonyms|..., class)
  blocklist   one doc_id per line";

#[derive(Parser)]
#[command(name = "bioner", version, about = "Biomedical NER toolkit", after_help = FORMATS)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LabelArgs {
    /// Entity classes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CLASSES.map(String::from))]
    classes: Vec<String>,

    /// Tag schema. IO cannot separate touching same-class entities.
    #[arg(long, default_value = "bio")]
    schema: TagSchema,
}

impl LabelArgs {
    fn space(&self) -> Result<LabelSpace> {
        if self.schema == TagSchema::Io {
            warn!("IO tagging merges consecutive same-class entities; BIO is recommended for production use");
        }
        LabelSpace::new(&self.classes, self.schema)
    }
}

#[derive(Args, Clone, Copy)]
struct ThresholdArg {
    /// Decision threshold in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Soft,
    Hard,
}

impl From<Mode> for LabelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Soft => LabelMode::Soft,
            Mode::Hard => LabelMode::Hard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OntologyFormat {
    Jsonl,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainFormat {
    Weak,
    Conll,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertTarget {
    /// One-hot probability file.
    Probs,
    /// Normalized CoNLL.
    Conll,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synonym index from ontology files.
    IngestOntology {
        /// Ontology files (JSON lines or TSV, chosen by extension unless --format is set).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        format: Option<OntologyFormat>,
        /// Match case-sensitively.
        #[arg(long)]
        no_case_fold: bool,
        /// Index JSON output.
        #[arg(long)]
        output: PathBuf,
    },
    /// Dictionary NER over a corpus.
    Tag {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write the run report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Encode corpus entities into per-token target vectors (probs format).
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "hard")]
        mode: Mode,
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Decode probability matrices into a corpus, one document per sentence.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        threshold: ThresholdArg,
    },
    /// Entity-level precision, recall and F1 of predictions against gold CoNLL.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        threshold: ThresholdArg,
    },
    /// Weak-label dataset tools.
    Weak {
        #[command(subcommand)]
        command: WeakCommand,
    },
    /// Train a classifier head on hash-featurized tokens.
    TrainHead {
        #[arg(long)]
        input: PathBuf,
        /// Input format; guessed from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<TrainFormat>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 256)]
        dim: usize,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        lr: f64,
        #[arg(long, default_value_t = TrainConfig::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-epoch loss trace (JSON array) here.
        #[arg(long)]
        loss_trace: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        threshold: ThresholdArg,
    },
    /// Predict label probabilities with a trained head.
    PredictHead {
        #[arg(long)]
        model: PathBuf,
        /// CoNLL file or JSON lines with a "tokens" field.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time a pipeline over a corpus.
    Bench {
        /// Pipeline config JSON.
        #[arg(long, conflicts_with = "index")]
        config: Option<PathBuf>,
        /// Shorthand for a single dictionary step.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Batch sizes to compare; defaults to the config's batch size.
        #[arg(long = "batch-size", value_delimiter = ',')]
        batch_sizes: Vec<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// CoNLL conversions.
    Conll {
        #[command(subcommand)]
        command: ConllCommand,
    },
}

#[derive(Subcommand)]
enum WeakCommand {
    /// Build a weak-label dataset from a prediction corpus.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        blocklist: Option<PathBuf>,
        /// Share of documents to keep, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "soft")]
        mode: Mode,
        /// Write provenance (filter parameters and counts) as JSON here.
        #[arg(long)]
        provenance: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Abstract, sentence and word counts.
    Stats {
        /// Weak dataset (JSON lines); use --corpus for a raw corpus.
        #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
        input: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Adjacent same-class entity counts.
    Adjacency {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum ConllCommand {
    /// Convert a CoNLL file.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "probs")]
        to: ConvertTarget,
        #[command(flatten)]
        labels: LabelArgs,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::file(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::file(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialization is infallible")
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

fn is_conll(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("conll" | "tsv" | "txt" | "iob" | "bio")
    )
}

#[derive(Deserialize)]
struct TokensLine {
    tokens: Vec<String>,
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    if is_conll(path) {
        return Ok(parse_conll(open(path)?)?.into_iter().map(|s| s.tokens).collect());
    }
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TokensLine = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(parsed.tokens);
    }
    Ok(out)
}

fn ingest_ontology(inputs: &[PathBuf], format: Option<OntologyFormat>, no_case_fold: bool, out: &Path) -> Result<()> {
    let mut index = SynonymIndex::new(NormalizationPolicy {
        case_fold: !no_case_fold,
    });
    let mut reports = Vec::new();
    for path in inputs {
        let format = match format {
            Some(OntologyFormat::Jsonl) => SourceFormat::JsonLines,
            Some(OntologyFormat::Tsv) => SourceFormat::Tsv,
            None => SourceFormat::from_path(path),
        };
        let report = index.ingest(open(path)?, format, &path.display().to_string())?;
        info!(
            "{}: {} terms, {} synonyms",
            report.source, report.terms, report.synonyms_indexed
        );
        reports.push(report);
    }
    write_text(Some(out), &index.to_json())?;
    write_text(None, &to_json(&reports))
}

fn load_index(path: &Path) -> Result<SynonymIndex> {
    SynonymIndex::from_json(&read_to_string(path)?)
}

fn run_tag(
    index: &Path,
    input: &Path,
    out: Option<&Path>,
    batch_size: usize,
    workers: usize,
    report_path: Option<&Path>,
) -> Result<()> {
    let options = RunOptions {
        batch_size,
        workers,
        guard: None,
    };
    if batch_size == 0 || workers == 0 {
        return Err(Error::InvalidArgument("--batch-size and --workers must be >= 1".into()));
    }
    let index = load_index(index)?;
    let (docs, skipped) = read_corpus_lenient(open(input)?)?;
    for s in &skipped {
        warn!("line {}: {}", s.line, s.message);
    }
    let pipeline = Pipeline::new().shared(DictionaryStep::new(Arc::new(index)));
    let (docs, report) = run(&pipeline, docs, &options)?;
    info!(
        "{} documents tagged, {} failed",
        report.documents_processed, report.documents_failed
    );
    let mut w = output(out)?;
    write_corpus(&mut w, &docs)?;
    w.flush()?;
    if let Some(p) = report_path {
        write_text(Some(p), &report.to_json())?;
    }
    Ok(())
}

fn run_encode(input: &Path, out: Option<&Path>, mode: LabelMode, space: &LabelSpace) -> Result<()> {
    let docs = read_corpus(open(input)?)?;
    let mut records = Vec::new();
    for doc in &docs {
        for section in &doc.sections {
            let tokens = tokenize(&section.text);
            let targets = encode(section.entities(), &tokens, space, mode)?;
            records.push(ProbRecord {
                tokens: tokens.into_iter().map(|t| t.text).collect(),
                probs: targets.to_rows(),
            });
        }
    }
    let mut w = output(out)?;
    write_prob_records(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

fn run_decode(input: &Path, out: Option<&Path>, space: &LabelSpace, threshold: f64) -> Result<()> {
    let records = read_prob_records(open(input)?)?;
    let mut docs = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let matrix = record.matrix(space.len())?;
        let tokens = tokens_from_words(&record.tokens).ok_or_else(|| Error::SentenceMismatch {
            sentence: i,
            message: "empty token".into(),
        })?;
        let text = record.tokens.join(" ");
        let mut section = Section::new("text", text);
        for entity in decode(&matrix, &tokens, space, threshold)? {
            section.add_entity(entity)?;
        }
        docs.push(Document::new(i.to_string(), vec![section])?);
    }
    let mut w = output(out)?;
    write_corpus(&mut w, &docs)?;
    w.flush()?;
    Ok(())
}

fn run_eval(gold: &Path, pred: &Path, format: ReportFormat, space: &LabelSpace, threshold: f64) -> Result<()> {
    let gold = parse_conll(open(gold)?)?;
    let preds = read_prob_records(open(pred)?)?;
    let report = evaluate_corpus(&preds, &gold, space, threshold)?;
    match format {
        ReportFormat::Json => write_text(None, &report.to_json()),
        ReportFormat::Table => write_text(None, &report.to_table()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_weak_build(
    input: &Path,
    out: Option<&Path>,
    blocklist: Option<&Path>,
    fraction: f64,
    seed: u64,
    mode: LabelMode,
    provenance: Option<&Path>,
    labels: &LabelArgs,
) -> Result<()> {
    let mut config = BuildConfig {
        blocklist: Default::default(),
        fraction,
        mode,
        seed,
    };
    config.validate()?;
    let space = labels.space()?;
    if let Some(path) = blocklist {
        config.blocklist = weak::read_blocklist(open(path)?)?;
    }
    let reader = open(input)?;
    let dataset = weak::build(reader, &input.display().to_string(), &space, &config)?;
    let p = &dataset.provenance;
    info!(
        "{} read, {} blocked, {} sampled out, {} included",
        p.documents_read, p.documents_blocked, p.documents_sampled_out, p.documents_included
    );
    for s in &p.skipped_lines {
        warn!("line {}: {}", s.line, s.message);
    }
    let mut w = output(out)?;
    dataset.write_jsonl(&mut w)?;
    w.flush()?;
    if let Some(path) = provenance {
        write_text(Some(path), &to_json(&dataset.provenance))?;
    }
    Ok(())
}

fn run_weak_stats(input: Option<&Path>, corpus: Option<&Path>) -> Result<()> {
    let stats = match (input, corpus) {
        (Some(path), _) => corpus_stats(&weak::read_records(open(path)?)?),
        (None, Some(path)) => document_stats(&read_corpus(open(path)?)?),
        (None, None) => return Err(Error::InvalidArgument("--input or --corpus is required".into())),
    };
    write_text(None, &to_json(&stats))
}

fn run_adjacency(input: &Path) -> Result<()> {
    let docs = read_corpus(open(input)?)?;
    write_text(None, &to_json(&adjacency_stats(&docs)))
}

fn training_examples(input: &Path, format: TrainFormat, space: &LabelSpace) -> Result<Vec<TrainingExample>> {
    match format {
        TrainFormat::Conll => parse_conll(open(input)?)?
            .into_iter()
            .map(|s| {
                let targets = conll_to_targets(&s.tags, space)?;
                Ok(TrainingExample {
                    tokens: s.tokens,
                    targets,
                })
            })
            .collect(),
        TrainFormat::Weak => weak::read_records(open(input)?)?
            .into_iter()
            .map(|r| {
                let targets = TargetSequence::from_rows(&r.targets, space.len())?;
                Ok(TrainingExample {
                    tokens: r.tokens,
                    targets,
                })
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_train(
    input: &Path,
    format: Option<TrainFormat>,
    out: &Path,
    dim: usize,
    lr: f64,
    epochs: usize,
    seed: u64,
    loss_trace: Option<&Path>,
    space: &LabelSpace,
    threshold: f64,
) -> Result<()> {
    check_threshold(threshold)?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(format!("--lr {lr} must be finite and > 0")));
    }
    let featurizer = HashFeaturizer::new(dim, seed)?;
    let format = format.unwrap_or(if is_conll(input) {
        TrainFormat::Conll
    } else {
        TrainFormat::Weak
    });
    let examples = training_examples(input, format, space)?;
    let config = TrainConfig {
        learning_rate: lr,
        epochs,
        seed,
        threshold,
    };
    let outcome = train(&examples, &featurizer, space, &config)?;
    info!(
        "loss {:.6} -> {:.6} over {} epochs",
        outcome.loss_trace[0],
        outcome.loss_trace[outcome.loss_trace.len() - 1],
        epochs
    );
    let tagger = HeadTagger::new(outcome.params, featurizer, threshold)?;
    write_text(Some(out), &to_json(&tagger.to_file()))?;
    if let Some(path) = loss_trace {
        write_text(Some(path), &serde_json::to_string(&outcome.loss_trace)?)?;
    }
    Ok(())
}

fn run_predict(model: &Path, input: &Path, out: Option<&Path>) -> Result<()> {
    let file: HeadFile = serde_json::from_str(&read_to_string(model)?)?;
    let tagger = HeadTagger::from_file(&file)?;
    let mut records = Vec::new();
    for tokens in read_token_lines(input)? {
        let probs = tagger.predict(&tokens)?;
        records.push(ProbRecord::new(tokens, &probs));
    }
    let mut w = output(out)?;
    write_prob_records(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    config: Option<&Path>,
    index: Option<&Path>,
    input: &Path,
    batch_sizes: &[usize],
    workers: Option<usize>,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let (pipeline, mut options) = match (config, index) {
        (Some(path), _) => {
            let config = PipelineConfig::load(path)?;
            let base = path.parent().unwrap_or(Path::new("."));
            (config.build(base)?, config.run_options()?)
        }
        (None, Some(path)) => (
            Pipeline::new().shared(DictionaryStep::new(Arc::new(load_index(path)?))),
            RunOptions::default(),
        ),
        (None, None) => return Err(Error::InvalidArgument("--config or --index is required".into())),
    };
    if let Some(w) = workers {
        options.workers = w;
    }
    let sizes = if batch_sizes.is_empty() {
        vec![options.batch_size]
    } else {
        batch_sizes.to_vec()
    };
    if sizes.contains(&0) || options.workers == 0 {
        return Err(Error::InvalidArgument(
            "batch sizes and worker count must be >= 1".into(),
        ));
    }
    let docs = read_corpus(open(input)?)?;
    if docs.is_empty() {
        return Err(Error::InvalidDocument("benchmark corpus is empty".into()));
    }
    let mut reports = Vec::new();
    let mut reference: Option<Vec<Document>> = None;
    for batch_size in sizes {
        let opts = RunOptions {
            batch_size,
            ..options.clone()
        };
        let (out_docs, report) = bench(&pipeline, docs.clone(), &opts)?;
        match &reference {
            Some(r) if *r != out_docs => warn!("outputs at batch size {batch_size} differ from the first setting"),
            Some(_) => {}
            None => reference = Some(out_docs),
        }
        reports.push(report);
    }
    let text = match format {
        ReportFormat::Json => to_json(&reports),
        ReportFormat::Table => reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n"),
    };
    write_text(out, &text)
}

fn run_convert(input: &Path, out: Option<&Path>, to: ConvertTarget, labels: &LabelArgs) -> Result<()> {
    let sentences = parse_conll(open(input)?)?;
    let mut w = output(out)?;
    match to {
        ConvertTarget::Conll => write_conll(&mut w, &sentences)?,
        ConvertTarget::Probs => {
            let space = labels.space()?;
            let mut records = Vec::with_capacity(sentences.len());
            for (i, s) in sentences.into_iter().enumerate() {
                let targets = conll_to_targets(&s.tags, &space).map_err(|e| Error::SentenceMismatch {
                    sentence: i,
                    message: e.to_string(),
                })?;
                records.push(ProbRecord {
                    tokens: s.tokens,
                    probs: targets.to_rows(),
                });
            }
            write_prob_records(&mut w, &records)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::IngestOntology {
            inputs,
            format,
            no_case_fold,
            output,
        } => ingest_ontology(&inputs, format, no_case_fold, &output),
        Command::Tag {
            index,
            input,
            output,
            batch_size,
            workers,
            report,
        } => run_tag(
            &index,
            &input,
            output.as_deref(),
            batch_size,
            workers,
            report.as_deref(),
        ),
        Command::Encode {
            input,
            output,
            mode,
            labels,
        } => run_encode(&input, output.as_deref(), mode.into(), &labels.space()?),
        Command::Decode {
            input,
            output,
            labels,
            threshold,
        } => {
            check_threshold(threshold.threshold)?;
            run_decode(&input, output.as_deref(), &labels.space()?, threshold.threshold)
        }
        Command::Eval {
            gold,
            pred,
            format,
            labels,
            threshold,
        } => {
            check_threshold(threshold.threshold)?;
            run_eval(&gold, &pred, format, &labels.space()?, threshold.threshold)
        }
        Command::Weak { command } => match command {
            WeakCommand::Build {
                input,
                output,
                blocklist,
                fraction,
                seed,
                mode,
                provenance,
                labels,
            } => run_weak_build(
                &input,
                output.as_deref(),
                blocklist.as_deref(),
                fraction,
                seed,
                mode.into(),
                provenance.as_deref(),
                &labels,
            ),
            WeakCommand::Stats { input, corpus } => run_weak_stats(input.as_deref(), corpus.as_deref()),
            WeakCommand::Adjacency { input } => run_adjacency(&input),
        },
        Command::TrainHead {
            input,
            format,
            output,
            dim,
            lr,
            epochs,
            seed,
            loss_trace,
            labels,
            threshold,
        } => run_train(
            &input,
            format,
            &output,
            dim,
            lr,
            epochs,
            seed,
            loss_trace.as_deref(),
            &labels.space()?,
            threshold.threshold,
        ),
        Command::PredictHead { model, input, output } => run_predict(&model, &input, output.as_deref()),
        Command::Bench {
            config,
            index,
            input,
            batch_sizes,
            workers,
            format,
            output,
        } => run_bench(
            config.as_deref(),
            index.as_deref(),
            &input,
            &batch_sizes,
            workers,
            format,
            output.as_deref(),
        ),
        Command::Conll {
            command:
                ConllCommand::Convert {
                    input,
                    output,
                    to,
                    labels,
                },
        } => run_convert(&input, output.as_deref(), to, &labels),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
