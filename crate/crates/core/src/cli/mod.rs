//! Subcommand pipeline: train the language model, score corpora, sweep and
//! select thresholds, classify, evaluate, run the classifier baselines, and
//! extrapolate labeling time.
//!
//! Conventions: machine-readable output goes to files and standard output,
//! human-readable progress to standard error. Exit codes: 0 success,
//! 1 internal failure (e.g. cannot write an output file), 2 user/input
//! error.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::{
    fit_tfidf, train_hashed_linear, train_logistic_sgd, train_nb, HashedTrainOptions,
    LinearTextClassifier, Norm, TextClassifierModel,
};
use crate::corpus::{self, Label, LabelRule, ParsedLine};
use crate::metrics;
use crate::ngram::{self, PerplexityScore};
use crate::textproc::{lm_tokenize, Pipeline, PipelineConfig, TokenSeq};
use crate::threshold;
use crate::{Error, Result};

/// Detect harmful documents in web corpora by language-model perplexity.
#[derive(Debug, Parser)]
#[command(name = "harmfilter", version, about)]
pub struct Cli {
    /// JSON config file providing defaults for omitted flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a Kneser-Ney n-gram model on JSONLines documents, write ARPA.
    LmTrain(LmTrainArgs),
    /// Score documents with a model: one perplexity line per document.
    Score(ScoreArgs),
    /// Sweep thresholds over labeled scores and select operating points.
    Sweep(SweepArgs),
    /// Label documents harmful/non-harmful against a fixed threshold.
    Classify(ClassifyArgs),
    /// Compare predictions to gold labels.
    Eval(EvalArgs),
    /// Train or apply the classifier baselines.
    Baseline(BaselineArgs),
    /// Extrapolate labeling time from corpus sizes and a throughput.
    EstimateTime(EstimateTimeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelRuleArg {
    /// Harmful iff the "adult" annotation is present.
    FromAdultAnnotation,
    FixedHarmful,
    FixedNonHarmful,
    None,
}

impl From<LabelRuleArg> for LabelRule {
    fn from(arg: LabelRuleArg) -> LabelRule {
        match arg {
            LabelRuleArg::FromAdultAnnotation => LabelRule::FromAdultAnnotation,
            LabelRuleArg::FixedHarmful => LabelRule::FixedHarmful,
            LabelRuleArg::FixedNonHarmful => LabelRule::FixedNonHarmful,
            LabelRuleArg::None => LabelRule::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct LmTrainArgs {
    /// Training documents (JSONLines with a "content" field).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// N-gram order, 1-6.
    #[arg(long)]
    pub order: Option<usize>,
    /// Output ARPA path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Replace degenerate discounts with (0.5, 1.0, 1.5) instead of failing.
    #[arg(long)]
    pub fallback_discounts: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// ARPA model path.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Documents to score (JSONLines).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output scores (JSONLines: id, logprob, tokens, ppl).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Worker threads. Output is byte-identical for any thread count.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Score file produced by the score subcommand.
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    /// Gold documents (JSONLines); labels derived via --label-rule.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Number of quantile grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Threshold report (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Optional TSV dump of the metric curves.
    #[arg(long, value_name = "FILE")]
    pub tsv: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub label_rule: Option<LabelRuleArg>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// ARPA model path.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Perplexity threshold: documents at or below it are harmful.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Documents to label (JSONLines).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Input re-emitted with added "ppl" and "harmful" fields.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions: classify output ("harmful") or baseline predictions
    /// ("pred").
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Gold documents (JSONLines); labels derived via --label-rule.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Evaluation report (JSON). Also printed to standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub label_rule: Option<LabelRuleArg>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(subcommand)]
    pub action: BaselineAction,
}

#[derive(Debug, Subcommand)]
pub enum BaselineAction {
    /// Train a baseline classifier on labeled JSONLines.
    Train(BaselineTrainArgs),
    /// Apply a trained baseline to JSONLines documents.
    Predict(BaselinePredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    /// TF-IDF + multinomial Naive Bayes.
    Nb,
    /// TF-IDF + SGD-trained logistic regression.
    Sgd,
    /// Hashed bag-of-n-grams linear classifier.
    Hashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L2,
    None,
}

#[derive(Debug, Args)]
pub struct BaselineTrainArgs {
    #[arg(long, value_enum)]
    pub kind: BaselineKind,
    /// Training documents (JSONLines).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Trained model container (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Preprocessing pipeline config (JSON). Default: lowercase + tokenize.
    #[arg(long, value_name = "FILE")]
    pub pipeline: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub label_rule: Option<LabelRuleArg>,
    #[arg(long)]
    pub seed: Option<u64>,

    // TF-IDF options (nb, sgd)
    #[arg(long, default_value_t = 1.0)]
    pub max_df: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub smooth_idf: bool,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,

    /// Naive Bayes smoothing.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    // SGD / hashed options
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,

    // hashed options
    #[arg(long, default_value_t = 1 << 16)]
    pub buckets: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub word_ngrams: usize,
    /// Hashed training threads; more than one is not bit-deterministic.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BaselinePredictArgs {
    /// Trained model container (JSON).
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Documents to label (JSONLines).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Input re-emitted with added "pred" and "score" fields.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateTimeArgs {
    /// Scoring throughput in MB/s.
    #[arg(long)]
    pub throughput: f64,
    /// TSV of corpora: name<TAB>bytes, one per line.
    #[arg(long, value_name = "FILE")]
    pub sizes: PathBuf,
}

/// Optional JSON config supplying defaults for omitted flags.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub order: Option<usize>,
    pub grid: Option<usize>,
    pub theta: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub label_rule: Option<LabelRule>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliFailure {
    pub code: u8,
    pub message: String,
}

impl std::fmt::Display for CliFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> CliFailure {
        CliFailure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn internal(path: &Path, e: std::io::Error) -> CliFailure {
    CliFailure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

const DEFAULT_ORDER: usize = 5;
const DEFAULT_GRID: usize = 100;

impl FileConfig {
    fn load(path: Option<&Path>) -> std::result::Result<FileConfig, CliFailure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliFailure {
            code: 2,
            message: format!("bad config file {}: {e}", path.display()),
        })
    }

    fn label_rule(&self, flag: Option<LabelRuleArg>) -> LabelRule {
        flag.map(LabelRule::from)
            .or(self.label_rule)
            .unwrap_or(LabelRule::FromAdultAnnotation)
    }

    fn threads(&self, flag: Option<usize>) -> usize {
        flag.or(self.threads).unwrap_or(1).max(1)
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(42)
    }
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> std::result::Result<(), CliFailure> {
    let config = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::LmTrain(args) => cmd_lm_train(args, &config),
        Command::Score(args) => cmd_score(args, &config),
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::Classify(args) => cmd_classify(args, &config),
        Command::Eval(args) => cmd_eval(args, &config),
        Command::Baseline(args) => match args.action {
            BaselineAction::Train(train) => cmd_baseline_train(train, &config),
            BaselineAction::Predict(predict) => cmd_baseline_predict(predict),
        },
        Command::EstimateTime(args) => cmd_estimate_time(args),
    }
}

fn cmd_lm_train(args: LmTrainArgs, config: &FileConfig) -> std::result::Result<(), CliFailure> {
    let order = args.order.or(config.order).unwrap_or(DEFAULT_ORDER);
    let outcome = corpus::read_jsonlines(&args.input, LabelRule::None)?;
    if outcome.skipped() > 0 {
        eprintln!(
            "warning: skipped {} malformed and {} empty lines in {}",
            outcome.skipped_malformed,
            outcome.skipped_empty,
            args.input.display()
        );
    }
    let docs: Vec<TokenSeq> = outcome
        .documents
        .iter()
        .map(|d| lm_tokenize(&d.content))
        .collect();
    let trained = ngram::train_model(&docs, order, args.fallback_discounts)?;
    for w in &trained.warnings {
        eprintln!("warning: {w}");
    }
    ngram::write_arpa(&trained.model, &args.out)?;

    let meta = trained.model.meta();
    let summary = json!({
        "documents": outcome.documents.len(),
        "skipped": outcome.skipped(),
        "tokens": meta.train_tokens,
        "vocab_size": trained.model.vocab().len(),
        "order": order,
        "ngram_counts": (1..=order).map(|k| trained.model.ngram_count(k)).collect::<Vec<_>>(),
        "discounts": meta.discounts.as_ref().map(|d| d.iter().cloned().collect::<Vec<_>>()),
        "warnings": trained.warnings,
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "trained order-{order} model on {} documents -> {}",
        outcome.documents.len(),
        args.out.display()
    );
    Ok(())
}

/// Per-line result of a streamed subcommand.
enum LineOut {
    Emit { line: String, harmful: Option<bool> },
    Empty,
    Malformed,
    Blank,
}

struct StreamStats {
    documents: u64,
    harmful: u64,
    skipped_malformed: u64,
    skipped_empty: u64,
}

impl StreamStats {
    fn skipped(&self) -> u64 {
        self.skipped_malformed + self.skipped_empty
    }
}

/// Stream a JSONLines file through a pure per-line function with ordered,
/// bounded-memory output. Lines are processed in parallel chunks but written
/// in input order, so the output bytes do not depend on the thread count.
fn process_stream<F>(
    input: &Path,
    out: &Path,
    threads: usize,
    per_line: F,
) -> std::result::Result<StreamStats, CliFailure>
where
    F: Fn(usize, &str) -> LineOut + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliFailure {
            code: 1,
            message: format!("cannot build thread pool: {e}"),
        })?;

    let reader = BufReader::new(File::open(input).map_err(|e| Error::io(input, e))?);
    let out_file = File::create(out).map_err(|e| internal(out, e))?;
    let mut writer = BufWriter::with_capacity(1 << 18, out_file);

    let mut stats = StreamStats {
        documents: 0,
        harmful: 0,
        skipped_malformed: 0,
        skipped_empty: 0,
    };

    const CHUNK: usize = 4096;
    let mut batch: Vec<(usize, String)> = Vec::with_capacity(CHUNK);
    let mut line_no = 0usize;
    let mut lines = reader.lines();
    loop {
        batch.clear();
        while batch.len() < CHUNK {
            match lines.next() {
                Some(line) => {
                    line_no += 1;
                    batch.push((line_no, line.map_err(|e| Error::io(input, e))?));
                }
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        let results: Vec<LineOut> = pool.install(|| {
            batch
                .par_iter()
                .map(|(no, line)| per_line(*no, line))
                .collect()
        });
        for r in results {
            match r {
                LineOut::Emit { line, harmful } => {
                    stats.documents += 1;
                    if harmful == Some(true) {
                        stats.harmful += 1;
                    }
                    writer
                        .write_all(line.as_bytes())
                        .map_err(|e| internal(out, e))?;
                    writer.write_all(b"\n").map_err(|e| internal(out, e))?;
                }
                LineOut::Empty => stats.skipped_empty += 1,
                LineOut::Malformed => stats.skipped_malformed += 1,
                LineOut::Blank => {}
            }
        }
    }
    writer.flush().map_err(|e| internal(out, e))?;
    Ok(stats)
}

fn source_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_score(args: ScoreArgs, config: &FileConfig) -> std::result::Result<(), CliFailure> {
    let model = ngram::read_arpa(&args.model)?;
    let threads = config.threads(args.threads);
    let source = source_name(&args.input);
    let bytes = fs::metadata(&args.input)
        .map_err(|e| Error::io(&args.input, e))?
        .len();

    let start = Instant::now();
    let stats = process_stream(&args.input, &args.out, threads, |line_no, line| {
        if line.trim().is_empty() {
            return LineOut::Blank;
        }
        let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
            return LineOut::Malformed;
        };
        match corpus::document_from_value(&value, &source, line_no, LabelRule::None) {
            ParsedLine::Doc(doc) => {
                let score = model.perplexity(&doc);
                LineOut::Emit {
                    line: serde_json::to_string(&score).expect("score serializes"),
                    harmful: None,
                }
            }
            ParsedLine::Empty => LineOut::Empty,
            ParsedLine::Malformed => LineOut::Malformed,
        }
    })?;
    let seconds = start.elapsed().as_secs_f64();
    let mb_per_s = if seconds > 0.0 {
        bytes as f64 / 1e6 / seconds
    } else {
        0.0
    };

    if stats.skipped() > 0 {
        eprintln!("warning: skipped {} lines", stats.skipped());
    }
    let summary = json!({
        "documents": stats.documents,
        "skipped": stats.skipped(),
        "bytes": bytes,
        "seconds": seconds,
        "mb_per_s": mb_per_s,
        "threads": threads,
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "scored {} documents ({:.1} MB) in {:.2}s: {:.1} MB/s with {} thread(s)",
        stats.documents,
        bytes as f64 / 1e6,
        seconds,
        mb_per_s,
        threads
    );
    Ok(())
}

fn read_scores(path: &Path) -> Result<Vec<PerplexityScore>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut scores = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let score: PerplexityScore =
            serde_json::from_str(&line).map_err(|e| Error::BadModelFile {
                path: path.to_path_buf(),
                msg: format!("bad score line: {e}"),
            })?;
        scores.push(score);
    }
    Ok(scores)
}

fn read_gold(path: &Path, rule: LabelRule) -> Result<Vec<(String, Label)>> {
    if rule == LabelRule::None {
        return Err(Error::BadParameter(
            "label rule 'none' cannot produce gold labels".to_string(),
        ));
    }
    let outcome = corpus::read_jsonlines(path, rule)?;
    if outcome.skipped() > 0 {
        eprintln!(
            "warning: skipped {} lines in gold file {}",
            outcome.skipped(),
            path.display()
        );
    }
    Ok(outcome
        .documents
        .into_iter()
        .map(|d| (d.id, d.gold_label.expect("rule always labels")))
        .collect())
}

/// Join scores with gold labels by id; both sides must match exactly.
fn join_scores(
    scores: Vec<PerplexityScore>,
    gold: &[(String, Label)],
) -> Result<Vec<(PerplexityScore, Label)>> {
    use std::collections::{HashMap, HashSet};
    let gold_by_id: HashMap<&str, Label> = gold.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut missing: Vec<String> = Vec::new();
    let mut extra: Vec<String> = Vec::new();
    let mut joined = Vec::with_capacity(scores.len());
    for score in scores {
        match gold_by_id.get(score.doc_id.as_str()) {
            Some(label) => joined.push((score, *label)),
            None => extra.push(score.doc_id.clone()),
        }
    }
    if joined.len() < gold.len() {
        let have: HashSet<&str> = joined.iter().map(|(s, _)| s.doc_id.as_str()).collect();
        missing = gold
            .iter()
            .filter(|(id, _)| !have.contains(id.as_str()))
            .map(|(id, _)| id.clone())
            .collect();
    }
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort();
        extra.sort();
        return Err(Error::IdMismatch {
            missing: missing.len(),
            extra: extra.len(),
            missing_sample: missing.into_iter().take(10).collect(),
            extra_sample: extra.into_iter().take(10).collect(),
        });
    }
    Ok(joined)
}

fn cmd_sweep(args: SweepArgs, config: &FileConfig) -> std::result::Result<(), CliFailure> {
    let grid = args.grid.or(config.grid).unwrap_or(DEFAULT_GRID);
    let rule = config.label_rule(args.label_rule);
    let scores = read_scores(&args.scores)?;
    let gold = read_gold(&args.gold, rule)?;
    let joined = join_scores(scores, &gold)?;
    let report = threshold::sweep_thresholds(&joined, grid)?;

    let json_text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&args.out, json_text).map_err(|e| internal(&args.out, e))?;
    if let Some(tsv_path) = &args.tsv {
        let file = File::create(tsv_path).map_err(|e| internal(tsv_path, e))?;
        report
            .write_tsv(BufWriter::new(file))
            .map_err(|e| internal(tsv_path, e))?;
    }

    let best = report
        .grid
        .iter()
        .find(|p| p.theta == report.selected.argmax_f1)
        .expect("selected threshold is on the grid");
    let summary = json!({
        "grid_points": report.grid.len(),
        "selected": report.selected,
        "f1_macro_at_argmax": best.f1_macro,
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "swept {} thresholds: argmax_f1 theta {:.4} (f1_macro {:.4}), max_harmful {:.4}, steepest_step {:.4}",
        report.grid.len(),
        report.selected.argmax_f1,
        best.f1_macro,
        report.selected.max_harmful,
        report.selected.steepest_step
    );
    Ok(())
}

fn cmd_classify(args: ClassifyArgs, config: &FileConfig) -> std::result::Result<(), CliFailure> {
    let theta = args.theta.or(config.theta).ok_or_else(|| CliFailure {
        code: 2,
        message: "--theta is required (flag or config file)".to_string(),
    })?;
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::BadTheta(theta).into());
    }
    let model = ngram::read_arpa(&args.model)?;
    let threads = config.threads(args.threads);
    let source = source_name(&args.input);

    let stats = process_stream(&args.input, &args.out, threads, |line_no, line| {
        if line.trim().is_empty() {
            return LineOut::Blank;
        }
        let Ok(mut value) = serde_json::from_str::<serde_json::Value>(line) else {
            return LineOut::Malformed;
        };
        match corpus::document_from_value(&value, &source, line_no, LabelRule::None) {
            ParsedLine::Doc(doc) => {
                let score = model.perplexity(&doc);
                let harmful = score.ppl <= theta;
                let obj = value.as_object_mut().expect("documents are objects");
                obj.insert("id".to_string(), json!(doc.id));
                obj.insert("ppl".to_string(), json!(score.ppl));
                obj.insert("harmful".to_string(), json!(harmful));
                LineOut::Emit {
                    line: serde_json::to_string(&value).expect("value serializes"),
                    harmful: Some(harmful),
                }
            }
            ParsedLine::Empty => LineOut::Empty,
            ParsedLine::Malformed => LineOut::Malformed,
        }
    })?;

    let pct = if stats.documents > 0 {
        100.0 * stats.harmful as f64 / stats.documents as f64
    } else {
        0.0
    };
    let summary = json!({
        "documents": stats.documents,
        "harmful": stats.harmful,
        "harmful_pct": pct,
        "theta": theta,
        "skipped": stats.skipped(),
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "labeled {} documents at theta {theta}: {:.2}% harmful",
        stats.documents, pct
    );
    Ok(())
}

/// Extract (id, predicted label) pairs from a predictions file: either
/// classify output with "harmful": bool, or baseline output with "pred".
fn read_predictions(path: &Path) -> Result<Vec<(String, Label)>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let source = source_name(path);
    let mut preds = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::BadModelFile {
            path: path.to_path_buf(),
            msg: format!("line {}: {msg}", idx + 1),
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| bad(format!("not JSON: {e}")))?;
        let id = match value.get("id").and_then(|v| v.as_str()) {
            Some(id) => id.to_string(),
            None => format!("{source}:{}", idx + 1),
        };
        let label = if let Some(h) = value.get("harmful").and_then(|v| v.as_bool()) {
            if h {
                Label::Harmful
            } else {
                Label::NonHarmful
            }
        } else if let Some(p) = value.get("pred").and_then(|v| v.as_str()) {
            match p {
                "harmful" => Label::Harmful,
                "non_harmful" => Label::NonHarmful,
                other => return Err(bad(format!("unknown pred value {other:?}"))),
            }
        } else {
            return Err(bad(
                "line has neither a \"harmful\" nor a \"pred\" field".to_string()
            ));
        };
        preds.push((id, label));
    }
    Ok(preds)
}

fn cmd_eval(args: EvalArgs, config: &FileConfig) -> std::result::Result<(), CliFailure> {
    let rule = config.label_rule(args.label_rule);
    let preds = read_predictions(&args.pred)?;
    let gold = read_gold(&args.gold, rule)?;
    let confusion = metrics::confusion(&preds, &gold)?;
    let report = metrics::report(confusion)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(out) = &args.out {
        fs::write(out, &text).map_err(|e| internal(out, e))?;
    }
    println!("{text}");
    eprintln!(
        "evaluated {} documents: f1_macro {:.4}, accuracy {:.4}",
        report.confusion.total(),
        report.f1_macro,
        report.accuracy
    );
    Ok(())
}

fn load_pipeline(path: Option<&Path>) -> Result<Pipeline> {
    match path {
        Some(p) => PipelineConfig::from_file(p)?.compile(),
        None => Ok(Pipeline::minimal()),
    }
}

fn cmd_baseline_train(
    args: BaselineTrainArgs,
    config: &FileConfig,
) -> std::result::Result<(), CliFailure> {
    let rule = config.label_rule(args.label_rule);
    if rule == LabelRule::None {
        return Err(Error::BadParameter(
            "label rule 'none' cannot produce training labels".to_string(),
        )
        .into());
    }
    let seed = config.seed(args.seed);
    let pipeline = load_pipeline(args.pipeline.as_deref())?;
    let outcome = corpus::read_jsonlines(&args.input, rule)?;
    if outcome.skipped() > 0 {
        eprintln!("warning: skipped {} lines", outcome.skipped());
    }
    let docs: Vec<TokenSeq> = outcome
        .documents
        .iter()
        .map(|d| pipeline.run(&d.content))
        .collect();
    let y: Vec<Label> = outcome
        .documents
        .iter()
        .map(|d| d.gold_label.expect("rule always labels"))
        .collect();

    let norm = match args.norm {
        NormArg::L2 => Norm::L2,
        NormArg::None => Norm::None,
    };
    let (vectorizer, classifier) = match args.kind {
        BaselineKind::Nb => {
            let v = fit_tfidf(&docs, args.max_df, args.smooth_idf, norm)?;
            let x: Vec<_> = docs.iter().map(|d| v.transform(d)).collect();
            let nb = train_nb(&x, &y, args.alpha, v.dim())?;
            (Some(v), LinearTextClassifier::NaiveBayes(nb))
        }
        BaselineKind::Sgd => {
            let v = fit_tfidf(&docs, args.max_df, args.smooth_idf, norm)?;
            let x: Vec<_> = docs.iter().map(|d| v.transform(d)).collect();
            let lr = train_logistic_sgd(&x, &y, args.lr, args.epochs, seed, v.dim())?;
            (Some(v), LinearTextClassifier::LogisticSgd(lr))
        }
        BaselineKind::Hashed => {
            let opts = HashedTrainOptions {
                buckets: args.buckets,
                dim: args.dim,
                word_ngrams: args.word_ngrams,
                epochs: args.epochs,
                lr: args.lr,
                threads: config.threads(args.threads),
                seed,
            };
            let (model, warnings) = train_hashed_linear(&docs, &y, &opts)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            (None, LinearTextClassifier::HashedBagNgram(model))
        }
    };

    let model = TextClassifierModel::new(pipeline, vectorizer, classifier);
    model.save(&args.out)?;
    let summary = json!({
        "kind": model.classifier.kind_name(),
        "documents": outcome.documents.len(),
        "vocab_size": model.vectorizer.as_ref().map(|v| v.dim()),
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "trained {} baseline on {} documents -> {}",
        model.classifier.kind_name(),
        outcome.documents.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_baseline_predict(args: BaselinePredictArgs) -> std::result::Result<(), CliFailure> {
    let model = TextClassifierModel::load(&args.model)?;
    let source = source_name(&args.input);
    let stats = process_stream(&args.input, &args.out, 1, |line_no, line| {
        if line.trim().is_empty() {
            return LineOut::Blank;
        }
        let Ok(mut value) = serde_json::from_str::<serde_json::Value>(line) else {
            return LineOut::Malformed;
        };
        match corpus::document_from_value(&value, &source, line_no, LabelRule::None) {
            ParsedLine::Doc(doc) => {
                let (label, score) = model.predict_text(&doc.content);
                let pred = match label {
                    Label::Harmful => "harmful",
                    Label::NonHarmful => "non_harmful",
                };
                let obj = value.as_object_mut().expect("documents are objects");
                obj.insert("id".to_string(), json!(doc.id));
                obj.insert("pred".to_string(), json!(pred));
                obj.insert("score".to_string(), json!(score));
                LineOut::Emit {
                    line: serde_json::to_string(&value).expect("value serializes"),
                    harmful: Some(label == Label::Harmful),
                }
            }
            ParsedLine::Empty => LineOut::Empty,
            ParsedLine::Malformed => LineOut::Malformed,
        }
    })?;

    let pct = if stats.documents > 0 {
        100.0 * stats.harmful as f64 / stats.documents as f64
    } else {
        0.0
    };
    let summary = json!({
        "documents": stats.documents,
        "harmful": stats.harmful,
        "harmful_pct": pct,
        "skipped": stats.skipped(),
        "out": args.out,
    });
    println!("{summary}");
    eprintln!(
        "predicted {} documents: {:.2}% harmful",
        stats.documents, pct
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct TimeEstimate {
    name: String,
    bytes: u64,
    hours: f64,
}

/// hours = bytes / (throughput MB/s * 1e6) / 3600, rounded to one decimal.
fn estimate_hours(bytes: u64, throughput_mb_s: f64) -> f64 {
    let hours = bytes as f64 / (throughput_mb_s * 1e6) / 3600.0;
    (hours * 10.0).round() / 10.0
}

fn cmd_estimate_time(args: EstimateTimeArgs) -> std::result::Result<(), CliFailure> {
    if args.throughput.is_nan() || args.throughput <= 0.0 {
        return Err(Error::BadParameter(format!(
            "throughput must be positive, got {}",
            args.throughput
        ))
        .into());
    }
    let text = fs::read_to_string(&args.sizes).map_err(|e| Error::io(&args.sizes, e))?;
    let mut estimates = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((name, bytes_str)) = line.split_once('\t') else {
            return Err(Error::BadParameter(format!(
                "{}:{}: expected name<TAB>bytes",
                args.sizes.display(),
                idx + 1
            ))
            .into());
        };
        let bytes: u64 = bytes_str.trim().parse().map_err(|_| {
            Error::BadParameter(format!(
                "{}:{}: bad byte count {bytes_str:?}",
                args.sizes.display(),
                idx + 1
            ))
        })?;
        estimates.push(TimeEstimate {
            name: name.to_string(),
            bytes,
            hours: estimate_hours(bytes, args.throughput),
        });
    }
    let mut stdout = std::io::stdout().lock();
    let mut emit = |line: String| -> std::result::Result<bool, CliFailure> {
        match writeln!(stdout, "{line}") {
            Ok(()) => Ok(true),
            // reader closed the pipe (e.g. `| head`); stop quietly
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
            Err(e) => Err(internal(Path::new("stdout"), e)),
        }
    };
    if !emit("language\tbytes\thours".to_string())? {
        return Ok(());
    }
    for e in &estimates {
        if !emit(format!("{}\t{}\t{:.1}", e.name, e.bytes, e.hours))? {
            return Ok(());
        }
    }
    Ok(())
}
