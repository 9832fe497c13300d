//! Normalization and tokenization shared by the language model and the
//! classifier baselines.
//!
//! Two entry points:
//!
//! * [`lm_tokenize`] — the fixed minimal pipeline the language model uses
//!   (lowercase, Unicode-whitespace split, punctuation runs separated).
//!   Fixed on purpose: model files and perplexity thresholds are only
//!   comparable when every run tokenizes identically.
//! * [`Pipeline`] — a configurable step list for the baselines (stopword
//!   removal, emoji aliasing, stemming, ...).

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A sequence of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> TokenSeq {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        TokenSeq { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }

    pub fn join(&self, sep: &str) -> String {
        self.tokens.join(sep)
    }

    pub fn into_vec(self) -> Vec<String> {
        self.tokens
    }
}

impl From<Vec<String>> for TokenSeq {
    fn from(tokens: Vec<String>) -> Self {
        TokenSeq::new(tokens)
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

/// Visit the tokens of already-normalized text without allocating them:
/// split on Unicode whitespace, then separate each chunk into maximal runs
/// of alphanumeric vs. non-alphanumeric characters ("punctuation runs").
pub fn for_each_token(text: &str, mut visit: impl FnMut(&str)) {
    for chunk in text.split_whitespace() {
        let mut run_start = 0;
        let mut run_alnum = false;
        for (pos, ch) in chunk.char_indices() {
            let alnum = ch.is_alphanumeric();
            if pos > 0 && alnum != run_alnum {
                visit(&chunk[run_start..pos]);
                run_start = pos;
            }
            run_alnum = alnum;
        }
        if run_start < chunk.len() {
            visit(&chunk[run_start..]);
        }
    }
}

fn tokenize_text(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for_each_token(text, |t| tokens.push(t.to_string()));
    tokens
}

/// Fixed tokenization used for language-model training and scoring:
/// lowercase, Unicode-whitespace split, punctuation runs as their own tokens.
pub fn lm_tokenize(text: &str) -> TokenSeq {
    TokenSeq::new(tokenize_text(&text.to_lowercase()))
}

/// One step of a [`PipelineConfig`]. Steps up to `Tokenize` operate on raw
/// text, steps after it on token sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum StepSpec {
    Lowercase,
    StripUrls,
    StripSpecialChars,
    Tokenize,
    RemoveStopwords { file: PathBuf },
    ReplaceEmoji { file: PathBuf },
    Stem,
}

impl StepSpec {
    fn is_raw_text(&self) -> bool {
        matches!(
            self,
            StepSpec::Lowercase | StepSpec::StripUrls | StepSpec::StripSpecialChars
        )
    }
}

/// Ordered list of processing steps, with data files referenced by path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub steps: Vec<StepSpec>,
    /// Directory that relative data-file paths resolve against.
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(steps: Vec<StepSpec>) -> PipelineConfig {
        PipelineConfig {
            steps,
            base_dir: None,
        }
    }

    /// Load a pipeline configuration from a JSON file. Relative data-file
    /// paths inside it resolve against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::BadPipeline(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let n_tokenize = self
            .steps
            .iter()
            .filter(|s| matches!(s, StepSpec::Tokenize))
            .count();
        if n_tokenize != 1 {
            return Err(Error::BadPipeline(format!(
                "Tokenize must appear exactly once, found {n_tokenize}"
            )));
        }
        let tokenize_at = self
            .steps
            .iter()
            .position(|s| matches!(s, StepSpec::Tokenize))
            .expect("checked above");
        for (i, step) in self.steps.iter().enumerate() {
            if i < tokenize_at && !step.is_raw_text() {
                return Err(Error::BadPipeline(format!(
                    "{step:?} operates on tokens but appears before Tokenize"
                )));
            }
            if i > tokenize_at && step.is_raw_text() {
                return Err(Error::BadPipeline(format!(
                    "{step:?} operates on raw text but appears after Tokenize"
                )));
            }
        }
        Ok(())
    }

    fn resolve(&self, file: &Path) -> PathBuf {
        match (&self.base_dir, file.is_relative()) {
            (Some(base), true) => base.join(file),
            _ => file.to_path_buf(),
        }
    }

    /// Validate the step order and load all referenced data files.
    pub fn compile(&self) -> Result<Pipeline> {
        self.validate()?;
        let mut steps = Vec::with_capacity(self.steps.len());
        for spec in &self.steps {
            steps.push(match spec {
                StepSpec::Lowercase => CompiledStep::Lowercase,
                StepSpec::StripUrls => CompiledStep::StripUrls,
                StepSpec::StripSpecialChars => CompiledStep::StripSpecialChars,
                StepSpec::Tokenize => CompiledStep::Tokenize,
                StepSpec::RemoveStopwords { file } => CompiledStep::RemoveStopwords {
                    stopwords: load_stopwords(&self.resolve(file))?,
                },
                StepSpec::ReplaceEmoji { file } => CompiledStep::ReplaceEmoji {
                    map: load_emoji_map(&self.resolve(file))?,
                },
                StepSpec::Stem => CompiledStep::Stem,
            });
        }
        Ok(Pipeline { steps })
    }
}

/// Stopword file: one token per line, UTF-8. Entries are lowercased.
fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect())
}

/// Emoji map: TSV `emoji<TAB>alias`, one entry per line. Longest emoji
/// sequences are matched first.
fn load_emoji_map(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((emoji, alias)) = line.split_once('\t') else {
            return Err(Error::BadPipeline(format!(
                "{}:{}: emoji map line has no tab separator",
                path.display(),
                i + 1
            )));
        };
        if emoji.is_empty() || alias.is_empty() {
            return Err(Error::BadPipeline(format!(
                "{}:{}: emoji map entry is empty",
                path.display(),
                i + 1
            )));
        }
        map.push((emoji.to_string(), alias.to_string()));
    }
    map.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(map)
}

/// A pipeline step with its data loaded. Serializable so trained baseline
/// models can embed the exact preprocessing they were fitted with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum CompiledStep {
    Lowercase,
    StripUrls,
    StripSpecialChars,
    Tokenize,
    RemoveStopwords { stopwords: BTreeSet<String> },
    ReplaceEmoji { map: Vec<(String, String)> },
    Stem,
}

/// A validated pipeline with all data files loaded; invocations are pure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pipeline {
    steps: Vec<CompiledStep>,
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").expect("static regex"));

impl Pipeline {
    /// Minimal default used when no pipeline file is given: lowercase and
    /// tokenize.
    pub fn minimal() -> Pipeline {
        Pipeline {
            steps: vec![CompiledStep::Lowercase, CompiledStep::Tokenize],
        }
    }

    pub fn run(&self, text: &str) -> TokenSeq {
        let mut raw: Option<String> = None;
        let mut tokens: Option<Vec<String>> = None;
        for step in &self.steps {
            match step {
                CompiledStep::Lowercase => {
                    let t = raw.as_deref().unwrap_or(text);
                    raw = Some(t.to_lowercase());
                }
                CompiledStep::StripUrls => {
                    let t = raw.as_deref().unwrap_or(text);
                    raw = Some(URL_RE.replace_all(t, " ").into_owned());
                }
                CompiledStep::StripSpecialChars => {
                    let t = raw.as_deref().unwrap_or(text);
                    raw = Some(
                        t.chars()
                            .filter(|c| c.is_alphanumeric() || c.is_whitespace())
                            .collect(),
                    );
                }
                CompiledStep::Tokenize => {
                    tokens = Some(tokenize_text(raw.as_deref().unwrap_or(text)));
                }
                CompiledStep::RemoveStopwords { stopwords } => {
                    let ts = tokens.as_mut().expect("validated: after Tokenize");
                    ts.retain(|t| !stopwords.contains(&t.to_lowercase()));
                }
                CompiledStep::ReplaceEmoji { map } => {
                    let ts = tokens.as_mut().expect("validated: after Tokenize");
                    for t in ts.iter_mut() {
                        if let Some(replaced) = replace_emoji(t, map) {
                            *t = replaced;
                        }
                    }
                }
                CompiledStep::Stem => {
                    let ts = tokens.as_mut().expect("validated: after Tokenize");
                    for t in ts.iter_mut() {
                        let stemmed = stem(t);
                        if stemmed != *t {
                            *t = stemmed;
                        }
                    }
                }
            }
        }
        TokenSeq::new(tokens.expect("validated: Tokenize present"))
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .steps
            .iter()
            .map(|s| match s {
                CompiledStep::Lowercase => "lowercase",
                CompiledStep::StripUrls => "strip_urls",
                CompiledStep::StripSpecialChars => "strip_special_chars",
                CompiledStep::Tokenize => "tokenize",
                CompiledStep::RemoveStopwords { .. } => "remove_stopwords",
                CompiledStep::ReplaceEmoji { .. } => "replace_emoji",
                CompiledStep::Stem => "stem",
            })
            .collect();
        write!(f, "{}", names.join(" -> "))
    }
}

/// Replace every mapped emoji sequence inside `token`, longest match first.
/// Returns `None` when nothing matched.
fn replace_emoji(token: &str, map: &[(String, String)]) -> Option<String> {
    if !map.iter().any(|(e, _)| token.contains(e.as_str())) {
        return None;
    }
    let mut out = String::with_capacity(token.len());
    let mut rest = token;
    'outer: while !rest.is_empty() {
        for (emoji, alias) in map {
            if let Some(tail) = rest.strip_prefix(emoji.as_str()) {
                out.push_str(alias);
                rest = tail;
                continue 'outer;
            }
        }
        let ch = rest.chars().next().expect("non-empty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    Some(out)
}

/// Fixed rule-based suffix stemmer. A deliberately small set of English
/// suffix rules; not equivalent to dictionary lemmatization.
fn stem(token: &str) -> String {
    let mut t = token.to_string();
    let len = |s: &String| s.chars().count();

    // plural forms
    if t.ends_with("sses") {
        t.truncate(t.len() - 2);
    } else if t.ends_with("ies") && len(&t) > 4 {
        t.truncate(t.len() - 3);
        t.push('y');
    } else if t.ends_with('s')
        && !t.ends_with("ss")
        && !t.ends_with("us")
        && !t.ends_with("is")
        && len(&t) > 3
    {
        t.truncate(t.len() - 1);
    }

    // verbal suffixes
    if t.ends_with("ing") && len(&t) > 5 {
        t.truncate(t.len() - 3);
    } else if t.ends_with("ed") && len(&t) > 4 {
        t.truncate(t.len() - 2);
    }

    // adverbial
    if t.ends_with("ly") && len(&t) > 4 {
        t.truncate(t.len() - 2);
    }
    t
}
