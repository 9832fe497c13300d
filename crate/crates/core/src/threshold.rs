//! Perplexity distribution summaries, threshold sweeps, and threshold-based
//! classification.
//!
//! Classification rule: a document is Harmful when its perplexity is at or
//! below the threshold (the model was trained on harmful text, so harmful
//! documents are the predictable ones). The sweep grid is built from evenly
//! spaced quantiles of the pooled perplexities, which keeps it dense where
//! the data lives despite the heavy right tail of non-harmful scores.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::metrics::{self, ConfusionCounts};
use crate::ngram::PerplexityScore;
use crate::{Error, Result};

/// Five-number summary of one class's perplexities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub label: Label,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn summarize(label: Label, mut ppls: Vec<f64>) -> Result<ClassDistribution> {
    if ppls.is_empty() {
        return Err(Error::SingleClass(label.other()));
    }
    ppls.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite perplexities"));
    Ok(ClassDistribution {
        label,
        count: ppls.len(),
        min: ppls[0],
        q1: quantile(&ppls, 0.25),
        median: quantile(&ppls, 0.5),
        q3: quantile(&ppls, 0.75),
        max: *ppls.last().expect("non-empty"),
    })
}

/// Per-class five-number summaries, (harmful, non-harmful). Errors if either
/// class is absent.
pub fn summarize_distributions(
    scores: &[(PerplexityScore, Label)],
) -> Result<(ClassDistribution, ClassDistribution)> {
    let split = |want: Label| -> Vec<f64> {
        scores
            .iter()
            .filter(|(_, l)| *l == want)
            .map(|(s, _)| s.ppl)
            .collect()
    };
    Ok((
        summarize(Label::Harmful, split(Label::Harmful))?,
        summarize(Label::NonHarmful, split(Label::NonHarmful))?,
    ))
}

/// One evaluated threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub theta: f64,
    pub f1_macro: f64,
    pub f1_harmful: f64,
    pub f1_non_harmful: f64,
    pub accuracy: f64,
}

/// The three operating points the sweep selects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedThresholds {
    /// Grid threshold with the highest macro-F1 (ties toward the smaller).
    pub argmax_f1: f64,
    /// Largest perplexity among gold-harmful documents: the smallest
    /// threshold that still captures every known-harmful document.
    pub max_harmful: f64,
    /// Grid point following the adjacent pair with the largest summed
    /// absolute change across the four metric curves.
    pub steepest_step: f64,
}

/// Metric curves over the threshold grid plus the selected thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub grid: Vec<GridPoint>,
    pub selected: SelectedThresholds,
}

impl ThresholdReport {
    /// Tab-separated curve dump for plotting.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta\tf1_macro\tf1_harmful\tf1_non_harmful\taccuracy")?;
        for p in &self.grid {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                p.theta, p.f1_macro, p.f1_harmful, p.f1_non_harmful, p.accuracy
            )?;
        }
        Ok(())
    }
}

fn confusion_at(scores: &[(PerplexityScore, Label)], theta: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (score, gold) in scores {
        let predicted = if score.ppl <= theta {
            Label::Harmful
        } else {
            Label::NonHarmful
        };
        c.record(predicted, *gold);
    }
    c
}

/// Evaluate `grid_size` quantile thresholds over labeled scores and select
/// the three operating points.
pub fn sweep_thresholds(
    scores: &[(PerplexityScore, Label)],
    grid_size: usize,
) -> Result<ThresholdReport> {
    if grid_size < 2 {
        return Err(Error::BadGridSize(grid_size));
    }
    for want in [Label::Harmful, Label::NonHarmful] {
        if !scores.iter().any(|(_, l)| *l == want) {
            return Err(Error::SingleClass(want.other()));
        }
    }

    let mut pooled: Vec<f64> = scores.iter().map(|(s, _)| s.ppl).collect();
    pooled.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite perplexities"));
    let mut grid_thetas = Vec::with_capacity(grid_size);
    for i in 1..=grid_size {
        let theta = quantile(&pooled, i as f64 / (grid_size + 1) as f64);
        if grid_thetas.last() != Some(&theta) {
            grid_thetas.push(theta);
        }
    }

    let grid: Vec<GridPoint> = grid_thetas
        .iter()
        .map(|&theta| {
            let report = metrics::report(confusion_at(scores, theta)).expect("non-empty scores");
            GridPoint {
                theta,
                f1_macro: report.f1_macro,
                f1_harmful: report.harmful.f1,
                f1_non_harmful: report.non_harmful.f1,
                accuracy: report.accuracy,
            }
        })
        .collect();

    let argmax_f1 = grid
        .iter()
        .max_by(|a, b| {
            a.f1_macro
                .partial_cmp(&b.f1_macro)
                .expect("finite metrics")
                // ties toward the smaller threshold
                .then(b.theta.partial_cmp(&a.theta).expect("finite thetas"))
        })
        .expect("non-empty grid")
        .theta;

    let max_harmful = scores
        .iter()
        .filter(|(_, l)| *l == Label::Harmful)
        .map(|(s, _)| s.ppl)
        .fold(f64::NEG_INFINITY, f64::max);

    let steepest_step = if grid.len() < 2 {
        grid[0].theta
    } else {
        let mut best_idx = 1;
        let mut best_delta = f64::NEG_INFINITY;
        for i in 1..grid.len() {
            let delta = (grid[i].f1_macro - grid[i - 1].f1_macro).abs()
                + (grid[i].f1_harmful - grid[i - 1].f1_harmful).abs()
                + (grid[i].f1_non_harmful - grid[i - 1].f1_non_harmful).abs()
                + (grid[i].accuracy - grid[i - 1].accuracy).abs();
            if delta > best_delta {
                best_delta = delta;
                best_idx = i;
            }
        }
        grid[best_idx].theta
    };

    Ok(ThresholdReport {
        grid,
        selected: SelectedThresholds {
            argmax_f1,
            max_harmful,
            steepest_step,
        },
    })
}

/// Label scores against a fixed threshold: Harmful iff ppl <= theta.
/// Order preserved.
pub fn classify_by_threshold(
    scores: &[PerplexityScore],
    theta: f64,
) -> Result<Vec<(String, Label)>> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::BadTheta(theta));
    }
    Ok(scores
        .iter()
        .map(|s| {
            let label = if s.ppl <= theta {
                Label::Harmful
            } else {
                Label::NonHarmful
            };
            (s.doc_id.clone(), label)
        })
        .collect())
}
