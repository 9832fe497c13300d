//! Classifier baselines the perplexity approach is compared against:
//! TF-IDF + multinomial Naive Bayes, TF-IDF + SGD-trained logistic
//! regression, and a hashed bag-of-n-grams linear classifier.

mod hashed;
mod logistic;
mod nb;
mod tfidf;

pub use hashed::{train_hashed_linear, HashedBagNgram, HashedTrainOptions};
pub use logistic::{train_logistic_sgd, LogisticSgd};
pub use nb::{train_nb, NaiveBayes};
pub use tfidf::{fit_tfidf, Norm, TfidfVectorizer};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::textproc::{Pipeline, TokenSeq};
use crate::{Error, Result};

/// Sparse feature vector: (index, value) pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

/// A trained linear text classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearTextClassifier {
    NaiveBayes(NaiveBayes),
    LogisticSgd(LogisticSgd),
    HashedBagNgram(HashedBagNgram),
}

impl LinearTextClassifier {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LinearTextClassifier::NaiveBayes(_) => "naive_bayes",
            LinearTextClassifier::LogisticSgd(_) => "logistic_sgd",
            LinearTextClassifier::HashedBagNgram(_) => "hashed_bag_ngram",
        }
    }
}

const MODEL_VERSION: u32 = 1;

/// Self-contained trained model: the preprocessing pipeline (with its data
/// embedded), the vectorizer when the classifier needs one, and the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextClassifierModel {
    pub version: u32,
    pub pipeline: Pipeline,
    pub vectorizer: Option<TfidfVectorizer>,
    pub classifier: LinearTextClassifier,
}

impl TextClassifierModel {
    pub fn new(
        pipeline: Pipeline,
        vectorizer: Option<TfidfVectorizer>,
        classifier: LinearTextClassifier,
    ) -> TextClassifierModel {
        TextClassifierModel {
            version: MODEL_VERSION,
            pipeline,
            vectorizer,
            classifier,
        }
    }

    /// Predicted label and the probability of that label.
    pub fn predict_tokens(&self, tokens: &TokenSeq) -> (Label, f64) {
        match &self.classifier {
            LinearTextClassifier::NaiveBayes(nb) => {
                let x = self
                    .vectorizer
                    .as_ref()
                    .expect("naive bayes model carries a vectorizer")
                    .transform(tokens);
                nb.predict(&x)
            }
            LinearTextClassifier::LogisticSgd(lr) => {
                let x = self
                    .vectorizer
                    .as_ref()
                    .expect("logistic model carries a vectorizer")
                    .transform(tokens);
                lr.predict(&x)
            }
            LinearTextClassifier::HashedBagNgram(h) => h.predict(tokens),
        }
    }

    /// Run the embedded pipeline on raw text, then predict.
    pub fn predict_text(&self, text: &str) -> (Label, f64) {
        self.predict_tokens(&self.pipeline.run(text))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self).map_err(|e| Error::BadModelFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TextClassifierModel> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: TextClassifierModel =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::BadModelFile {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?;
        if model.version != MODEL_VERSION {
            return Err(Error::BadModelFile {
                path: path.to_path_buf(),
                msg: format!(
                    "unsupported model version {} (expected {MODEL_VERSION})",
                    model.version
                ),
            });
        }
        Ok(model)
    }
}

/// 64-bit FNV-1a. Fixed published hash so feature bucketing is reproducible
/// across implementations.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub(crate) fn class_index(label: Label) -> usize {
    match label {
        Label::NonHarmful => 0,
        Label::Harmful => 1,
    }
}

pub(crate) fn class_label(index: usize) -> Label {
    if index == 1 {
        Label::Harmful
    } else {
        Label::NonHarmful
    }
}

pub(crate) fn check_two_classes(y: &[Label]) -> Result<()> {
    let harmful = y.contains(&Label::Harmful);
    let non_harmful = y.contains(&Label::NonHarmful);
    match (harmful, non_harmful) {
        (true, true) => Ok(()),
        (true, false) => Err(Error::SingleClass(Label::Harmful)),
        (false, true) => Err(Error::SingleClass(Label::NonHarmful)),
        (false, false) => Err(Error::EmptyEval),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a64_published_vectors() {
        // reference values for the 64-bit FNV-1a parameters
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn model_container_round_trips() {
        let docs = vec![
            TokenSeq::new(vec!["spam".into(), "offer".into()]),
            TokenSeq::new(vec!["meeting".into(), "notes".into()]),
        ];
        let y = vec![Label::Harmful, Label::NonHarmful];
        let v = fit_tfidf(&docs, 1.0, true, Norm::L2).unwrap();
        let x: Vec<SparseVec> = docs.iter().map(|d| v.transform(d)).collect();
        let nb = train_nb(&x, &y, 1.0, v.dim()).unwrap();
        let model = TextClassifierModel::new(
            Pipeline::minimal(),
            Some(v),
            LinearTextClassifier::NaiveBayes(nb),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = TextClassifierModel::load(&path).unwrap();
        assert_eq!(loaded.version, 1);
        assert_eq!(loaded.classifier.kind_name(), "naive_bayes");
        let (l1, s1) = model.predict_text("spam offer now");
        let (l2, s2) = loaded.predict_text("spam offer now");
        assert_eq!(l1, l2);
        assert!((s1 - s2).abs() < 1e-12);
    }
}
