//! N-gram language modeling with interpolated modified Kneser-Ney smoothing.
//!
//! The pipeline is count -> discount -> estimate -> query:
//!
//! * [`count_ngrams`] gathers raw highest-order counts and continuation
//!   (adjusted) counts for the lower orders, plus the counts-of-counts the
//!   discount estimator needs.
//! * [`estimate_discounts`] derives the three per-order discounts D1, D2,
//!   D3+ from the counts-of-counts.
//! * [`estimate_model`] builds the interpolated probability and backoff
//!   tables.
//! * [`KneserNeyModel`] answers log10 probability and perplexity queries and
//!   round-trips through the ARPA text format ([`write_arpa`], [`read_arpa`]).
//!
//! Probabilities are base-10 logs throughout, matching the ARPA convention.

mod arpa;
mod counts;
mod discounts;
mod model;

pub use arpa::{read_arpa, read_arpa_from, write_arpa, write_arpa_to};
pub use counts::{count_ngrams, NGramCounts};
pub use discounts::{estimate_discounts, DiscountSet, Discounts, FALLBACK_DISCOUNTS};
pub use model::{
    estimate_model, train_model, Entry, KneserNeyModel, ModelMeta, PerplexityScore, TrainedModel,
};

/// Highest supported n-gram order.
pub const MAX_ORDER: usize = 6;

/// Sentence-start sentinel: context only, never predicted.
pub const BOS_TOKEN: &str = "<s>";
/// Sentence-end sentinel: predicted once per document.
pub const EOS_TOKEN: &str = "</s>";
/// Unknown-word sentinel.
pub const UNK_TOKEN: &str = "<unk>";

pub(crate) const UNK: u32 = 0;
pub(crate) const BOS: u32 = 1;
pub(crate) const EOS: u32 = 2;

/// Fixed-width n-gram key: token ids padded with `NO_TOKEN`. All keys in one
/// table have the same live length, so padding never makes two grams collide.
pub(crate) type GramKey = [u32; MAX_ORDER];
pub(crate) const NO_TOKEN: u32 = u32::MAX;

pub(crate) fn gram_key(ids: &[u32]) -> GramKey {
    debug_assert!(ids.len() <= MAX_ORDER);
    let mut key = [NO_TOKEN; MAX_ORDER];
    key[..ids.len()].copy_from_slice(ids);
    key
}

/// Token string <-> id mapping including the three sentinels.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    map: rustc_hash::FxHashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    pub(crate) fn new() -> Vocab {
        let mut v = Vocab::default();
        for tok in [UNK_TOKEN, BOS_TOKEN, EOS_TOKEN] {
            v.intern(tok);
        }
        v
    }

    pub(crate) fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.map.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.map.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.map.get(word).copied()
    }

    /// Id used when scoring document text: out-of-vocabulary words and
    /// literal sentinel strings both map to `<unk>`.
    pub(crate) fn scoring_id(&self, word: &str) -> u32 {
        if word == BOS_TOKEN || word == EOS_TOKEN || word == UNK_TOKEN {
            return UNK;
        }
        self.map.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    /// All entries, sentinels included.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Word types including `<unk>` and `</s>` but excluding `<s>`, i.e. the
    /// support of every conditional distribution.
    pub fn predicted_size(&self) -> usize {
        self.words.len() - 1
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
