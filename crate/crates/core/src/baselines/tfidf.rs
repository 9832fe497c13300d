use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::textproc::TokenSeq;
use crate::{Error, Result};

use super::SparseVec;

/// Final-vector normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    None,
}

/// TF-IDF vectorizer with a lexicographically sorted vocabulary.
///
/// tf is the raw term count in the document; idf is
/// `ln((1+|D|)/(1+df)) + 1` with smoothing on, `ln(|D|/df) + 1` otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    max_df: f64,
    smoothing: bool,
    norm: Norm,
}

/// Fit a vectorizer on tokenized documents. Tokens whose document frequency
/// exceeds `max_df * |docs|` are excluded from the vocabulary.
pub fn fit_tfidf(
    docs: &[TokenSeq],
    max_df: f64,
    smoothing: bool,
    norm: Norm,
) -> Result<TfidfVectorizer> {
    if !(max_df > 0.0 && max_df <= 1.0) {
        return Err(Error::BadParameter(format!(
            "max_df must be in (0, 1], got {max_df}"
        )));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n_docs = docs.len() as f64;
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    let mut seen: Vec<&str> = Vec::new();
    for doc in docs {
        seen.clear();
        seen.extend(doc.iter().map(|t| t.as_str()));
        seen.sort_unstable();
        seen.dedup();
        for t in &seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut vocabulary = Vec::new();
    let mut idf = Vec::new();
    for (token, &freq) in df.iter() {
        if freq as f64 > max_df * n_docs {
            continue;
        }
        vocabulary.push(token.to_string());
        idf.push(if smoothing {
            ((1.0 + n_docs) / (1.0 + freq as f64)).ln() + 1.0
        } else {
            (n_docs / freq as f64).ln() + 1.0
        });
    }
    Ok(TfidfVectorizer {
        vocabulary,
        idf,
        max_df,
        smoothing,
        norm,
    })
}

impl TfidfVectorizer {
    /// Vocabulary size (feature dimension).
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        let i = self
            .vocabulary
            .binary_search_by(|v| v.as_str().cmp(token))
            .ok()?;
        Some(self.idf[i])
    }

    /// Sparse TF-IDF vector of a document. All-OOV documents map to the zero
    /// vector.
    pub fn transform(&self, doc: &TokenSeq) -> SparseVec {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for token in doc {
            if let Ok(i) = self
                .vocabulary
                .binary_search_by(|v| v.as_str().cmp(token.as_str()))
            {
                *counts.entry(i as u32).or_insert(0.0) += 1.0;
            }
        }
        let mut vec: SparseVec = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i as usize]))
            .collect();
        if self.norm == Norm::L2 {
            let norm = vec.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in vec.iter_mut() {
                    *v /= norm;
                }
            }
        }
        vec
    }
}
