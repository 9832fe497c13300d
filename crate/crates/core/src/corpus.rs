//! OSCAR-style JSONLines ingestion, gold-label extraction, and dataset splits.
//!
//! One JSON object per line, `"content"` holds the document text, and
//! `"metadata.annotation"` optionally carries tags such as `"adult"`.
//! Malformed lines are skipped and counted instead of aborting the read:
//! web-scale files contain noise.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Annotation tag that marks a document as adult content.
pub const ADULT_TAG: &str = "adult";

/// Gold class of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Harmful,
    NonHarmful,
}

impl Label {
    pub fn other(self) -> Label {
        match self {
            Label::Harmful => Label::NonHarmful,
            Label::NonHarmful => Label::Harmful,
        }
    }
}

/// How gold labels are derived at ingestion time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// `"adult"` annotation present => Harmful, absent => NonHarmful.
    #[default]
    FromAdultAnnotation,
    /// Every document is Harmful (e.g. a pre-filtered harmful dump).
    FixedHarmful,
    /// Every document is NonHarmful (a designated clean source).
    FixedNonHarmful,
    /// Leave documents unlabeled.
    None,
}

impl LabelRule {
    fn apply(self, annotations: &BTreeSet<String>) -> Option<Label> {
        match self {
            LabelRule::FromAdultAnnotation => {
                if annotations.contains(ADULT_TAG) {
                    Some(Label::Harmful)
                } else {
                    Some(Label::NonHarmful)
                }
            }
            LabelRule::FixedHarmful => Some(Label::Harmful),
            LabelRule::FixedNonHarmful => Some(Label::NonHarmful),
            LabelRule::None => None,
        }
    }
}

/// One web-crawl record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Stable id; synthesized as `<filename>:<line-number>` when the line
    /// carries no `"id"` field.
    pub id: String,
    pub content: String,
    pub annotations: BTreeSet<String>,
    pub gold_label: Option<Label>,
    pub source: String,
}

/// Result of reading one JSONLines file.
#[derive(Debug, Default)]
pub struct ReadOutcome {
    pub documents: Vec<Document>,
    /// Lines that were not a JSON object with a string `"content"` field.
    pub skipped_malformed: usize,
    /// Valid lines whose content was empty.
    pub skipped_empty: usize,
}

impl ReadOutcome {
    pub fn skipped(&self) -> usize {
        self.skipped_malformed + self.skipped_empty
    }
}

/// What a single line parsed to.
pub enum ParsedLine {
    Doc(Document),
    Empty,
    Malformed,
}

/// Extract a [`Document`] from an already-parsed JSON value.
///
/// `source` names the file and `line_no` is the 1-based physical line number;
/// together they synthesize the id when the object has no `"id"` field.
pub fn document_from_value(
    value: &serde_json::Value,
    source: &str,
    line_no: usize,
    rule: LabelRule,
) -> ParsedLine {
    let Some(obj) = value.as_object() else {
        return ParsedLine::Malformed;
    };
    let Some(content) = obj.get("content").and_then(|c| c.as_str()) else {
        return ParsedLine::Malformed;
    };
    let mut annotations = BTreeSet::new();
    match obj.get("metadata").and_then(|m| m.get("annotation")) {
        Some(serde_json::Value::Array(tags)) => {
            for tag in tags {
                match tag.as_str() {
                    Some(t) => {
                        annotations.insert(t.to_string());
                    }
                    None => return ParsedLine::Malformed,
                }
            }
        }
        Some(serde_json::Value::Null) | None => {}
        Some(_) => return ParsedLine::Malformed,
    }
    if content.is_empty() {
        return ParsedLine::Empty;
    }
    let id = match obj.get("id").and_then(|i| i.as_str()) {
        Some(i) => i.to_string(),
        None => format!("{source}:{line_no}"),
    };
    ParsedLine::Doc(Document {
        id,
        content: content.to_string(),
        gold_label: rule.apply(&annotations),
        annotations,
        source: source.to_string(),
    })
}

/// Read an OSCAR-style JSONLines file.
///
/// Blank lines are ignored; malformed and empty-content lines are skipped and
/// counted. An unreadable file is fatal.
pub fn read_jsonlines(path: impl AsRef<Path>, rule: LabelRule) -> Result<ReadOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let source = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_jsonlines_from(BufReader::new(file), &source, rule)
}

/// Same as [`read_jsonlines`] but from any buffered reader. `source` is used
/// for synthesized ids.
pub fn read_jsonlines_from<R: BufRead>(
    reader: R,
    source: &str,
    rule: LabelRule,
) -> Result<ReadOutcome> {
    let mut out = ReadOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let parsed = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(value) => document_from_value(&value, source, line_no, rule),
            Err(_) => ParsedLine::Malformed,
        };
        match parsed {
            ParsedLine::Doc(doc) => out.documents.push(doc),
            ParsedLine::Empty => out.skipped_empty += 1,
            ParsedLine::Malformed => out.skipped_malformed += 1,
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct DocLine<'a> {
    id: &'a str,
    content: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<MetaLine<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_label: Option<Label>,
}

#[derive(Serialize)]
struct MetaLine<'a> {
    annotation: Vec<&'a str>,
}

/// Re-serialize documents as JSONLines in the input schema (content and
/// annotations preserved, plus the id and gold label when known).
pub fn write_jsonlines<W: Write>(mut writer: W, docs: &[Document]) -> std::io::Result<()> {
    for doc in docs {
        let line = DocLine {
            id: &doc.id,
            content: &doc.content,
            metadata: if doc.annotations.is_empty() {
                None
            } else {
                Some(MetaLine {
                    annotation: doc.annotations.iter().map(|s| s.as_str()).collect(),
                })
            },
            gold_label: doc.gold_label,
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Order-preserving subsequence of documents carrying `tag`.
pub fn filter_by_annotation(docs: &[Document], tag: &str) -> Vec<Document> {
    docs.iter()
        .filter(|d| d.annotations.contains(tag))
        .cloned()
        .collect()
}

/// Disjoint train/validation/test partition of a document set.
#[derive(Debug)]
pub struct DatasetSplit {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub seed: u64,
}

/// Deterministic shuffle by `seed`, then contiguous partition by `ratios`.
/// Train and validation sizes round down; the remainder goes to test.
pub fn split_dataset(
    mut docs: Vec<Document>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadSplitRatios(r_train, r_val, r_test));
    }
    if docs.len() < 3 {
        return Err(Error::TooFewDocuments {
            min: 3,
            got: docs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    docs.shuffle(&mut rng);
    let n = docs.len();
    let n_train = (n as f64 * r_train).floor() as usize;
    let n_val = (n as f64 * r_val).floor() as usize;
    let test = docs.split_off(n_train + n_val);
    let validation = docs.split_off(n_train);
    Ok(DatasetSplit {
        train: docs,
        validation,
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::io::Cursor;

    fn doc(id: &str, tags: &[&str]) -> Document {
        Document {
            id: id.to_string(),
            content: format!("content of {id}"),
            annotations: tags.iter().map(|t| t.to_string()).collect(),
            gold_label: None,
            source: "test".to_string(),
        }
    }

    fn read_str(data: &str, rule: LabelRule) -> ReadOutcome {
        read_jsonlines_from(Cursor::new(data.as_bytes()), "fixture.jsonl", rule).unwrap()
    }

    #[test]
    fn adult_annotation_yields_harmful() {
        let out = read_str(
            r#"{"content":"hello","metadata":{"annotation":["adult"]}}"#,
            LabelRule::FromAdultAnnotation,
        );
        assert_eq!(out.documents.len(), 1);
        assert_eq!(out.documents[0].gold_label, Some(Label::Harmful));
    }

    #[test]
    fn absent_annotation_yields_non_harmful() {
        let out = read_str(r#"{"content":"hello"}"#, LabelRule::FromAdultAnnotation);
        assert_eq!(out.documents[0].gold_label, Some(Label::NonHarmful));
    }

    #[test]
    fn malformed_line_skipped_and_counted() {
        let data = "{\"content\":\"a\"}\nnot json at all\n{\"content\":\"b\"}\n";
        let out = read_str(data, LabelRule::None);
        assert_eq!(out.documents.len(), 2);
        assert_eq!(out.skipped_malformed, 1);
        assert_eq!(out.skipped(), 1);
    }

    #[test]
    fn empty_content_counted_separately() {
        let data = "{\"content\":\"\"}\n{\"content\":\"x\"}\n";
        let out = read_str(data, LabelRule::None);
        assert_eq!(out.documents.len(), 1);
        assert_eq!(out.skipped_empty, 1);
    }

    #[test]
    fn ids_synthesized_from_source_and_line() {
        let data = "\n{\"content\":\"a\"}\n\n{\"content\":\"b\"}\n";
        let out = read_str(data, LabelRule::None);
        // Physical line numbers, blank lines included in the numbering.
        assert_eq!(out.documents[0].id, "fixture.jsonl:2");
        assert_eq!(out.documents[1].id, "fixture.jsonl:4");
    }

    #[test]
    fn explicit_id_field_wins() {
        let out = read_str(r#"{"id":"doc-7","content":"a"}"#, LabelRule::None);
        assert_eq!(out.documents[0].id, "doc-7");
    }

    #[test]
    fn null_annotation_treated_as_none() {
        let out = read_str(
            r#"{"content":"a","metadata":{"annotation":null}}"#,
            LabelRule::FromAdultAnnotation,
        );
        assert_eq!(out.documents[0].gold_label, Some(Label::NonHarmful));
    }

    #[test]
    fn non_array_annotation_is_malformed() {
        let out = read_str(
            r#"{"content":"a","metadata":{"annotation":"adult"}}"#,
            LabelRule::FromAdultAnnotation,
        );
        assert_eq!(out.documents.len(), 0);
        assert_eq!(out.skipped_malformed, 1);
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = read_jsonlines("/nonexistent/x.jsonl", LabelRule::None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn filter_keeps_tagged_in_order() {
        let docs = vec![doc("d1", &["adult"]), doc("d2", &[]), doc("d3", &["adult"])];
        let kept = filter_by_annotation(&docs, "adult");
        assert_eq!(
            kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(),
            vec!["d1", "d3"]
        );
    }

    #[test]
    fn filter_empty_input() {
        assert!(filter_by_annotation(&[], "adult").is_empty());
    }

    #[test]
    fn filter_counts_match_fixture() {
        // 100 synthetic docs, 37 tagged (every i with i*7 % 19 < 7).
        let tagged = |i: usize| i * 7 % 19 < 7;
        let docs: Vec<Document> = (0..100)
            .map(|i| {
                if tagged(i) {
                    doc(&format!("d{i}"), &["adult"])
                } else {
                    doc(&format!("d{i}"), &[])
                }
            })
            .collect();
        let expected = (0..100).filter(|&i| tagged(i)).count();
        assert_eq!(expected, 37);
        let kept = filter_by_annotation(&docs, "adult");
        assert_eq!(kept.len(), expected);
        assert!(kept.iter().all(|d| d.annotations.contains("adult")));
    }

    #[test]
    fn split_sizes_round_down() {
        let docs: Vec<Document> = (0..10).map(|i| doc(&format!("d{i}"), &[])).collect();
        let split = split_dataset(docs, (0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(split.train.len(), 6);
        assert_eq!(split.validation.len(), 2);
        assert_eq!(split.test.len(), 2);
    }

    #[test]
    fn split_floor_remainder_to_test() {
        let docs: Vec<Document> = (0..7).map(|i| doc(&format!("d{i}"), &[])).collect();
        let split = split_dataset(docs, (0.5, 0.25, 0.25), 1).unwrap();
        assert_eq!(
            (split.train.len(), split.validation.len(), split.test.len()),
            (3, 1, 3)
        );
    }

    #[test]
    fn split_deterministic_for_seed() {
        let docs: Vec<Document> = (0..20).map(|i| doc(&format!("d{i}"), &[])).collect();
        let a = split_dataset(docs.clone(), (0.6, 0.2, 0.2), 42).unwrap();
        let b = split_dataset(docs, (0.6, 0.2, 0.2), 42).unwrap();
        let ids = |part: &[Document]| part.iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a.train), ids(&b.train));
        assert_eq!(ids(&a.validation), ids(&b.validation));
        assert_eq!(ids(&a.test), ids(&b.test));
    }

    #[test]
    fn split_is_a_partition() {
        let docs: Vec<Document> = (0..53).map(|i| doc(&format!("d{i}"), &[])).collect();
        let split = split_dataset(docs.clone(), (0.5, 0.3, 0.2), 3).unwrap();
        let mut seen = HashSet::new();
        for part in [&split.train, &split.validation, &split.test] {
            for d in part.iter() {
                assert!(seen.insert(d.id.clone()), "duplicate id {}", d.id);
            }
        }
        assert_eq!(seen.len(), docs.len());
    }

    #[test]
    fn split_rejects_tiny_input() {
        let docs = vec![doc("a", &[]), doc("b", &[])];
        assert!(matches!(
            split_dataset(docs, (0.6, 0.2, 0.2), 0),
            Err(Error::TooFewDocuments { .. })
        ));
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let docs: Vec<Document> = (0..5).map(|i| doc(&format!("d{i}"), &[])).collect();
        assert!(matches!(
            split_dataset(docs.clone(), (0.5, 0.5, 0.5), 0),
            Err(Error::BadSplitRatios(..))
        ));
        assert!(matches!(
            split_dataset(docs, (1.0, 0.0, 0.0), 0),
            Err(Error::BadSplitRatios(..))
        ));
    }

    #[test]
    fn reserialize_preserves_count_and_content() {
        let data = concat!(
            "{\"content\":\"hello \\\"world\\\" \\u00e9\",\"metadata\":{\"annotation\":[\"adult\",\"noisy\"]}}\n",
            "{\"content\":\"tab\\tand\\nnewline\"}\n",
        );
        let first = read_str(data, LabelRule::None);
        let mut buf = Vec::new();
        write_jsonlines(&mut buf, &first.documents).unwrap();
        let second =
            read_jsonlines_from(Cursor::new(&buf), "round.jsonl", LabelRule::None).unwrap();
        assert_eq!(first.documents.len(), second.documents.len());
        for (a, b) in first.documents.iter().zip(second.documents.iter()) {
            assert_eq!(a.content.as_bytes(), b.content.as_bytes());
            assert_eq!(a.annotations, b.annotations);
        }
    }
}
