//! Confusion counts, per-class precision/recall/F1, macro-F1, and accuracy.
//!
//! Harmful is the positive class throughout. Degenerate 0/0 ratios are
//! defined as 0 and flagged instead of crashing, so threshold sweeps can
//! visit extreme operating points.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

/// 2x2 cross-tabulation of predictions against gold labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: Label, gold: Label) {
        match (predicted, gold) {
            (Label::Harmful, Label::Harmful) => self.tp += 1,
            (Label::NonHarmful, Label::NonHarmful) => self.tn += 1,
            (Label::Harmful, Label::NonHarmful) => self.fp += 1,
            (Label::NonHarmful, Label::Harmful) => self.fn_ += 1,
        }
    }

    /// The same table with the positive-class convention swapped.
    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

/// Precision/recall/F1 for one class.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full evaluation report for a binary harmful/non-harmful run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionCounts,
    pub harmful: ClassMetrics,
    pub non_harmful: ClassMetrics,
    pub f1_macro: f64,
    pub accuracy: f64,
    /// Ratios that were 0/0 and therefore defined as 0.
    pub degenerate: Vec<String>,
}

fn ratio(num: u64, den: u64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Cross-tabulate predictions against gold labels, joining on document id.
///
/// The two id sets must be identical; otherwise the error reports what is
/// missing on each side.
pub fn confusion(preds: &[(String, Label)], gold: &[(String, Label)]) -> Result<ConfusionCounts> {
    let gold_by_id: HashMap<&str, Label> = gold.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut missing: Vec<String> = Vec::new();
    let mut extra: Vec<String> = Vec::new();
    let mut counts = ConfusionCounts::default();
    let mut seen = 0usize;
    for (id, pred) in preds {
        match gold_by_id.get(id.as_str()) {
            Some(g) => {
                seen += 1;
                counts.record(*pred, *g);
            }
            None => extra.push(id.clone()),
        }
    }
    if seen < gold.len() {
        let pred_ids: HashMap<&str, ()> = preds.iter().map(|(id, _)| (id.as_str(), ())).collect();
        missing = gold
            .iter()
            .filter(|(id, _)| !pred_ids.contains_key(id.as_str()))
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
    Ok(counts)
}

/// Compute the evaluation report from confusion counts.
pub fn report(c: ConfusionCounts) -> Result<EvalReport> {
    if c.total() == 0 {
        return Err(Error::EmptyEval);
    }
    let mut degenerate = Vec::new();
    let p_h = ratio(c.tp, c.tp + c.fp, "precision_harmful", &mut degenerate);
    let r_h = ratio(c.tp, c.tp + c.fn_, "recall_harmful", &mut degenerate);
    let p_n = ratio(c.tn, c.tn + c.fn_, "precision_non_harmful", &mut degenerate);
    let r_n = ratio(c.tn, c.tn + c.fp, "recall_non_harmful", &mut degenerate);
    let f1_h = f1(p_h, r_h);
    let f1_n = f1(p_n, r_n);
    Ok(EvalReport {
        confusion: c,
        harmful: ClassMetrics {
            precision: p_h,
            recall: r_h,
            f1: f1_h,
        },
        non_harmful: ClassMetrics {
            precision: p_n,
            recall: r_n,
            f1: f1_n,
        },
        f1_macro: (f1_h + f1_n) / 2.0,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        degenerate,
    })
}
