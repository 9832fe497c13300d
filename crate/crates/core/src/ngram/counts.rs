use rustc_hash::FxHashMap;

use crate::textproc::TokenSeq;
use crate::{Error, Result};

use super::{gram_key, GramKey, Vocab, BOS, BOS_TOKEN, EOS, EOS_TOKEN, MAX_ORDER, UNK_TOKEN};

/// Per-order n-gram counts feeding the Kneser-Ney estimator.
///
/// The highest order stores raw occurrence counts. Lower orders store
/// continuation counts: the number of distinct words observed immediately to
/// the left of the gram. Grams beginning with `<s>` are the exception — no
/// word can precede `<s>`, so they keep their raw counts at every order.
/// The `<s>` unigram itself is not stored: it never receives probability
/// mass.
#[derive(Debug)]
pub struct NGramCounts {
    order: usize,
    vocab: Vocab,
    /// `grams[k-1]`: counts for order k.
    grams: Vec<FxHashMap<GramKey, u64>>,
    /// `counts_of_counts[k-1][r-1]`: number of order-k grams with count r,
    /// r in 1..=4.
    counts_of_counts: Vec<[u64; 4]>,
    /// Sum of stored unigram counts (the base-distribution denominator).
    unigram_mass: u64,
    doc_count: u64,
    /// Predicted positions over the corpus: words plus one `</s>` per doc.
    token_count: u64,
}

impl NGramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn counts_of_counts(&self, order: usize) -> [u64; 4] {
        self.counts_of_counts[order - 1]
    }

    pub fn unigram_mass(&self) -> u64 {
        self.unigram_mass
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn token_count(&self) -> u64 {
        self.token_count
    }

    /// Number of stored grams at `order`.
    pub fn gram_count(&self, order: usize) -> usize {
        self.grams[order - 1].len()
    }

    /// Count of a gram given as token strings (sentinels allowed).
    pub fn count_of(&self, tokens: &[&str]) -> Option<u64> {
        if tokens.is_empty() || tokens.len() > self.order {
            return None;
        }
        let mut ids = Vec::with_capacity(tokens.len());
        for t in tokens {
            ids.push(self.vocab.id(t)?);
        }
        self.grams[tokens.len() - 1].get(&gram_key(&ids)).copied()
    }

    pub(crate) fn grams(&self, order: usize) -> &FxHashMap<GramKey, u64> {
        &self.grams[order - 1]
    }
}

/// Count n-grams over tokenized documents.
///
/// Each document is padded with a single leading `<s>` and trailing `</s>`.
/// Every position emits the longest window ending there (truncated at the
/// document start), so sentence-initial grams shorter than `order` are
/// counted raw at their own length.
pub fn count_ngrams(docs: &[TokenSeq], order: usize) -> Result<NGramCounts> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::BadOrder {
            got: order,
            max: MAX_ORDER,
        });
    }
    if docs.iter().all(|d| d.is_empty()) {
        return Err(Error::EmptyCorpus);
    }

    let mut vocab = Vocab::new();
    let mut grams: Vec<FxHashMap<GramKey, u64>> = vec![FxHashMap::default(); order];
    let mut token_count = 0u64;

    let mut padded: Vec<u32> = Vec::new();
    for doc in docs {
        padded.clear();
        padded.push(BOS);
        for tok in doc {
            if tok == BOS_TOKEN || tok == EOS_TOKEN || tok == UNK_TOKEN {
                return Err(Error::ReservedToken(tok.clone()));
            }
            padded.push(vocab.intern(tok));
        }
        padded.push(EOS);
        token_count += padded.len() as u64 - 1;

        for i in 0..padded.len() {
            let start = (i + 1).saturating_sub(order);
            let gram = &padded[start..=i];
            if gram.len() == 1 && gram[0] == BOS {
                continue;
            }
            *grams[gram.len() - 1].entry(gram_key(gram)).or_insert(0) += 1;
        }
    }

    // Lower orders: replace raw counts with continuation counts, except for
    // grams beginning with <s>. Each stored (k+1)-gram is one distinct left
    // extension of its k-suffix.
    for k in (1..order).rev() {
        let mut continuation: FxHashMap<GramKey, u64> = FxHashMap::default();
        for longer in grams[k].keys() {
            let suffix = &longer[1..=k];
            debug_assert!(suffix[0] != BOS);
            *continuation.entry(gram_key(suffix)).or_insert(0) += 1;
        }
        // keep the raw counts of <s>-initial grams
        for (gram, count) in grams[k - 1].iter() {
            if gram[0] == BOS {
                continuation.insert(*gram, *count);
            }
        }
        grams[k - 1] = continuation;
    }

    let counts_of_counts = grams
        .iter()
        .map(|m| {
            let mut coc = [0u64; 4];
            for &c in m.values() {
                if (1..=4).contains(&c) {
                    coc[(c - 1) as usize] += 1;
                }
            }
            coc
        })
        .collect();
    let unigram_mass = grams[0].values().sum();

    Ok(NGramCounts {
        order,
        vocab,
        grams,
        counts_of_counts,
        unigram_mass,
        doc_count: docs.len() as u64,
        token_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::new(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn raw_bigram_counts() {
        let counts = count_ngrams(&[seq(&["a", "b"]), seq(&["a", "b"])], 2).unwrap();
        assert_eq!(counts.count_of(&["a", "b"]), Some(2));
    }

    #[test]
    fn continuation_count_is_distinct_predecessors() {
        let counts = count_ngrams(&[seq(&["a", "b"]), seq(&["a", "b"])], 2).unwrap();
        // "b" is preceded only by "a", regardless of how often.
        assert_eq!(counts.count_of(&["b"]), Some(1));
        // "a" is preceded only by <s>.
        assert_eq!(counts.count_of(&["a"]), Some(1));
        // </s> is preceded only by "b".
        assert_eq!(counts.count_of(&[EOS_TOKEN]), Some(1));
    }

    #[test]
    fn single_token_doc_pads_both_sides() {
        let counts = count_ngrams(&[seq(&["x"])], 2).unwrap();
        assert_eq!(counts.count_of(&[BOS_TOKEN, "x"]), Some(1));
        assert_eq!(counts.count_of(&["x", EOS_TOKEN]), Some(1));
    }

    #[test]
    fn bos_unigram_not_stored() {
        let counts = count_ngrams(&[seq(&["x"])], 2).unwrap();
        assert_eq!(counts.count_of(&[BOS_TOKEN]), None);
        assert_eq!(counts.doc_count(), 1);
    }

    #[test]
    fn bos_initial_grams_keep_raw_counts() {
        // <s> a occurs 3 times; continuation counting would give it 0.
        let docs = vec![seq(&["a", "b"]), seq(&["a", "c"]), seq(&["a", "b"])];
        let counts = count_ngrams(&docs, 3).unwrap();
        assert_eq!(counts.count_of(&[BOS_TOKEN, "a"]), Some(3));
        // while "a b" is continuation-counted: only <s> precedes it
        assert_eq!(counts.count_of(&["a", "b"]), Some(1));
    }

    #[test]
    fn truncated_windows_only_at_doc_start() {
        let counts = count_ngrams(&[seq(&["a", "b", "c"])], 3).unwrap();
        // trigram windows: <s> a b, a b c, b c </s>
        assert_eq!(counts.count_of(&[BOS_TOKEN, "a", "b"]), Some(1));
        assert_eq!(counts.count_of(&["a", "b", "c"]), Some(1));
        assert_eq!(counts.count_of(&["b", "c", EOS_TOKEN]), Some(1));
        // truncated emissions: <s>, <s> a
        assert_eq!(counts.count_of(&[BOS_TOKEN, "a"]), Some(1));
        assert_eq!(counts.gram_count(3), 3);
    }

    #[test]
    fn suffix_of_every_stored_gram_is_stored() {
        let docs = vec![
            seq(&["a", "b", "a", "c"]),
            seq(&["c", "b"]),
            seq(&["a", "b", "c"]),
        ];
        let counts = count_ngrams(&docs, 3).unwrap();
        for k in 2..=3 {
            for gram in counts.grams(k).keys() {
                let suffix = gram_key(&gram[1..k]);
                assert!(
                    counts.grams(k - 1).contains_key(&suffix),
                    "missing suffix of {gram:?}"
                );
            }
        }
    }

    #[test]
    fn counts_of_counts_definition() {
        let docs = vec![seq(&["a", "b"]), seq(&["a", "b"])];
        let counts = count_ngrams(&docs, 2).unwrap();
        // bigrams: (<s>,a)=2, (a,b)=2, (b,</s>)=2
        assert_eq!(counts.counts_of_counts(2), [0, 3, 0, 0]);
        // unigrams: a=1, b=1, </s>=1
        assert_eq!(counts.counts_of_counts(1), [3, 0, 0, 0]);
        assert_eq!(counts.unigram_mass(), 3);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(count_ngrams(&[], 2), Err(Error::EmptyCorpus)));
        assert!(matches!(
            count_ngrams(&[seq(&[])], 2),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn empty_doc_allowed_alongside_content() {
        let counts = count_ngrams(&[seq(&[]), seq(&["a"])], 2).unwrap();
        // empty doc contributes <s> </s>
        assert_eq!(counts.count_of(&[BOS_TOKEN, EOS_TOKEN]), Some(1));
        assert_eq!(counts.token_count(), 3); // </s> + a + </s>
    }

    #[test]
    fn reserved_tokens_rejected() {
        for bad in [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN] {
            assert!(matches!(
                count_ngrams(&[seq(&["a", bad])], 2),
                Err(Error::ReservedToken(_))
            ));
        }
    }

    #[test]
    fn order_bounds_checked() {
        assert!(matches!(
            count_ngrams(&[seq(&["a"])], 0),
            Err(Error::BadOrder { .. })
        ));
        assert!(matches!(
            count_ngrams(&[seq(&["a"])], 7),
            Err(Error::BadOrder { .. })
        ));
    }
}
