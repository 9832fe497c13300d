use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

use super::{check_two_classes, class_index, class_label, SparseVec};

/// Multinomial Naive Bayes with add-alpha smoothing over (possibly
/// fractional) feature counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayes {
    log_prior: [f64; 2],
    /// `feature_log_prob[c][f]` = ln p(f | c)
    feature_log_prob: [Vec<f64>; 2],
    alpha: f64,
}

/// Train on sparse feature vectors (e.g. TF-IDF) and binary labels.
pub fn train_nb(x: &[SparseVec], y: &[Label], alpha: f64, dim: usize) -> Result<NaiveBayes> {
    if x.len() != y.len() {
        return Err(Error::BadParameter(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::BadParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    check_two_classes(y)?;

    let mut class_count = [0u64; 2];
    let mut feature_sum = [vec![0.0f64; dim], vec![0.0f64; dim]];
    for (vec, label) in x.iter().zip(y) {
        let c = class_index(*label);
        class_count[c] += 1;
        for &(i, v) in vec {
            feature_sum[c][i as usize] += v;
        }
    }

    let n = x.len() as f64;
    let mut log_prior = [0.0f64; 2];
    let mut feature_log_prob = [vec![0.0f64; dim], vec![0.0f64; dim]];
    for c in 0..2 {
        log_prior[c] = (class_count[c] as f64 / n).ln();
        let total: f64 = feature_sum[c].iter().sum();
        let denom = total + alpha * dim as f64;
        for f in 0..dim {
            feature_log_prob[c][f] = ((feature_sum[c][f] + alpha) / denom).ln();
        }
    }
    Ok(NaiveBayes {
        log_prior,
        feature_log_prob,
        alpha,
    })
}

impl NaiveBayes {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self, label: Label) -> f64 {
        self.log_prior[class_index(label)]
    }

    /// Unnormalized per-class log joint probabilities.
    pub fn log_joint(&self, x: &SparseVec) -> [f64; 2] {
        let mut joint = self.log_prior;
        for &(i, v) in x {
            for (c, j) in joint.iter_mut().enumerate() {
                *j += v * self.feature_log_prob[c][i as usize];
            }
        }
        joint
    }

    /// Predicted label and its posterior probability.
    pub fn predict(&self, x: &SparseVec) -> (Label, f64) {
        let joint = self.log_joint(x);
        let best = if joint[1] > joint[0] { 1 } else { 0 };
        let max = joint[best];
        let denom: f64 = joint.iter().map(|j| (j - max).exp()).sum();
        (class_label(best), 1.0 / denom)
    }
}
