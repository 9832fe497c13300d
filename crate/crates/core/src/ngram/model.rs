use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::textproc::TokenSeq;
use crate::Result;

use super::{
    count_ngrams, estimate_discounts, gram_key, DiscountSet, GramKey, NGramCounts, Vocab, BOS, EOS,
    UNK,
};

/// ARPA placeholder probability for `<s>`: it is a context, never a
/// prediction, so it carries no real mass.
pub(crate) const BOS_LOG_PROB: f64 = -99.0;

/// One n-gram table entry: log10 probability, and the log10 backoff weight
/// when the gram has been observed as a context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log_prob: f64,
    pub log_backoff: Option<f64>,
}

/// Provenance recorded at estimation time; absent on models read from ARPA.
#[derive(Debug, Clone, Default)]
pub struct ModelMeta {
    pub train_tokens: Option<u64>,
    pub doc_count: Option<u64>,
    pub discounts: Option<DiscountSet>,
}

/// An immutable interpolated modified Kneser-Ney model.
///
/// Stored probabilities are the fully interpolated conditionals; queries use
/// the longest stored context and multiply backoff weights for the skipped
/// context lengths.
#[derive(Debug)]
pub struct KneserNeyModel {
    order: usize,
    vocab: Vocab,
    /// `tables[k-1]`: entries for order k.
    tables: Vec<FxHashMap<GramKey, Entry>>,
    meta: ModelMeta,
}

/// Per-document score: sum of per-token log10 probabilities over the padded
/// document, the number of scored tokens (`</s>` included, `<s>` not), and
/// the perplexity `10^(-logprob/tokens)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerplexityScore {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(rename = "logprob")]
    pub log10_sum: f64,
    #[serde(rename = "tokens")]
    pub n_tokens: u64,
    pub ppl: f64,
}

impl KneserNeyModel {
    pub(crate) fn from_tables(
        order: usize,
        vocab: Vocab,
        tables: Vec<FxHashMap<GramKey, Entry>>,
        meta: ModelMeta,
    ) -> KneserNeyModel {
        debug_assert_eq!(tables.len(), order);
        KneserNeyModel {
            order,
            vocab,
            tables,
            meta,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    /// Number of stored grams at `order`.
    pub fn ngram_count(&self, order: usize) -> usize {
        self.tables[order - 1].len()
    }

    /// Stored entry for an exact n-gram given as token strings. Sentinel
    /// strings (`<s>`, `</s>`, `<unk>`) name the sentinels here.
    pub fn entry(&self, tokens: &[&str]) -> Option<&Entry> {
        if tokens.is_empty() || tokens.len() > self.order {
            return None;
        }
        let mut ids = Vec::with_capacity(tokens.len());
        for t in tokens {
            ids.push(self.vocab.id(t)?);
        }
        self.tables[tokens.len() - 1].get(&gram_key(&ids))
    }

    /// Iterate stored grams of one order as (tokens, entry).
    pub fn entries(&self, order: usize) -> impl Iterator<Item = (Vec<&str>, &Entry)> {
        self.tables[order - 1].iter().map(move |(key, entry)| {
            let toks = key[..order].iter().map(|&id| self.vocab.word(id)).collect();
            (toks, entry)
        })
    }

    pub(crate) fn tables(&self) -> &[FxHashMap<GramKey, Entry>] {
        &self.tables
    }

    fn lookup(&self, ids: &[u32]) -> Option<&Entry> {
        self.tables[ids.len() - 1].get(&gram_key(ids))
    }

    /// log10 p(ids[i] | ids[..i]), using at most order-1 context tokens.
    fn query(&self, ids: &[u32], i: usize) -> f64 {
        let max_ctx = i.min(self.order - 1);
        let word = ids[i];
        let mut lp = self.tables[0]
            .get(&gram_key(&[word]))
            .expect("every scoring id has a unigram entry")
            .log_prob;
        let mut matched = 0;
        for len in 1..=max_ctx {
            match self.lookup(&ids[i - len..=i]) {
                Some(e) => {
                    lp = e.log_prob;
                    matched = len;
                }
                None => break, // longer grams cannot be stored either
            }
        }
        for len in matched + 1..=max_ctx {
            match self.lookup(&ids[i - len..i]) {
                Some(ctx) => lp += ctx.log_backoff.unwrap_or(0.0),
                None => break, // unstored context backs off with weight 1
            }
        }
        lp
    }

    /// Conditional log10 probability of `word` after `context`. Sentinel
    /// strings resolve to the sentinels; out-of-vocabulary words to `<unk>`.
    pub fn cond_logprob(&self, context: &[&str], word: &str) -> f64 {
        let mut ids: Vec<u32> = context
            .iter()
            .map(|t| self.vocab.id(t).unwrap_or(UNK))
            .collect();
        ids.push(self.vocab.id(word).unwrap_or(UNK));
        self.query(&ids, ids.len() - 1)
    }

    /// Score a tokenized document: pad with `<s>`/`</s>`, sum per-token log10
    /// probabilities. Returns the sum and the number of scored tokens
    /// (always at least 1, for `</s>`).
    pub fn logprob(&self, tokens: &TokenSeq) -> (f64, u64) {
        let mut ids = Vec::with_capacity(tokens.len() + 2);
        ids.push(BOS);
        for tok in tokens {
            ids.push(self.vocab.scoring_id(tok));
        }
        ids.push(EOS);
        let mut sum = 0.0;
        for i in 1..ids.len() {
            sum += self.query(&ids, i);
        }
        (sum, (ids.len() - 1) as u64)
    }

    /// Tokenize raw text with the fixed LM tokenizer and score it.
    /// Returns (log10 sum, scored tokens, perplexity).
    ///
    /// Identical to `logprob(&lm_tokenize(text))` but skips per-token
    /// allocations; this is the bulk-scoring hot path.
    pub fn score_text(&self, text: &str) -> (f64, u64, f64) {
        let lowered = text.to_lowercase();
        let mut ids = Vec::with_capacity(64);
        ids.push(BOS);
        crate::textproc::for_each_token(&lowered, |tok| ids.push(self.vocab.scoring_id(tok)));
        ids.push(EOS);
        let mut log10_sum = 0.0;
        for i in 1..ids.len() {
            log10_sum += self.query(&ids, i);
        }
        let n_tokens = (ids.len() - 1) as u64;
        let ppl = 10f64.powf(-log10_sum / n_tokens as f64);
        (log10_sum, n_tokens, ppl)
    }

    /// Perplexity of a document's content.
    pub fn perplexity(&self, doc: &Document) -> PerplexityScore {
        let (log10_sum, n_tokens, ppl) = self.score_text(&doc.content);
        PerplexityScore {
            doc_id: doc.id.clone(),
            log10_sum,
            n_tokens,
            ppl,
        }
    }
}

struct CtxStats {
    denom: u64,
    n1: f64,
    n2: f64,
    n3plus: f64,
}

impl CtxStats {
    fn gamma(&self, d: &super::Discounts) -> f64 {
        (d.d1 * self.n1 + d.d2 * self.n2 + d.d3plus * self.n3plus) / self.denom as f64
    }
}

/// Estimate the interpolated modified Kneser-Ney model from counts and
/// discounts. Unpruned: every stored n-gram gets a table entry.
pub fn estimate_model(counts: &NGramCounts, discounts: &DiscountSet) -> KneserNeyModel {
    let order = counts.order();
    let mut tables: Vec<FxHashMap<GramKey, Entry>> = Vec::with_capacity(order);
    // linear-space copies of the previous order, for the interpolation term
    let mut lower_linear: FxHashMap<GramKey, f64> = FxHashMap::default();

    // unigrams: interpolate the continuation distribution with the uniform
    // distribution over the predicted vocabulary (includes <unk>, not <s>)
    let d = discounts.for_order(1);
    let mass = counts.unigram_mass() as f64;
    let mut stats = CtxStats {
        denom: counts.unigram_mass(),
        n1: 0.0,
        n2: 0.0,
        n3plus: 0.0,
    };
    for &c in counts.grams(1).values() {
        match c {
            1 => stats.n1 += 1.0,
            2 => stats.n2 += 1.0,
            _ => stats.n3plus += 1.0,
        }
    }
    let gamma1 = stats.gamma(d);
    let uniform = 1.0 / (counts.grams(1).len() + 1) as f64;
    let mut unigrams = FxHashMap::default();
    for (&key, &c) in counts.grams(1) {
        let p = (c as f64 - d.apply(c)).max(0.0) / mass + gamma1 * uniform;
        unigrams.insert(
            key,
            Entry {
                log_prob: p.log10(),
                log_backoff: None,
            },
        );
        lower_linear.insert(key, p);
    }
    let unk_p = gamma1 * uniform;
    unigrams.insert(
        gram_key(&[UNK]),
        Entry {
            log_prob: unk_p.log10(),
            log_backoff: None,
        },
    );
    lower_linear.insert(gram_key(&[UNK]), unk_p);
    unigrams.insert(
        gram_key(&[BOS]),
        Entry {
            log_prob: BOS_LOG_PROB,
            log_backoff: None,
        },
    );
    tables.push(unigrams);

    for k in 2..=order {
        let d = discounts.for_order(k);
        let mut contexts: FxHashMap<GramKey, CtxStats> = FxHashMap::default();
        for (key, &c) in counts.grams(k) {
            let ctx = contexts.entry(gram_key(&key[..k - 1])).or_insert(CtxStats {
                denom: 0,
                n1: 0.0,
                n2: 0.0,
                n3plus: 0.0,
            });
            ctx.denom += c;
            match c {
                1 => ctx.n1 += 1.0,
                2 => ctx.n2 += 1.0,
                _ => ctx.n3plus += 1.0,
            }
        }

        let mut table = FxHashMap::default();
        let mut linear = FxHashMap::default();
        for (&key, &c) in counts.grams(k) {
            let ctx = &contexts[&gram_key(&key[..k - 1])];
            let lower = lower_linear[&gram_key(&key[1..k])];
            let p = (c as f64 - d.apply(c)).max(0.0) / ctx.denom as f64 + ctx.gamma(d) * lower;
            table.insert(
                key,
                Entry {
                    log_prob: p.log10(),
                    log_backoff: None,
                },
            );
            linear.insert(key, p);
        }

        for (ctx_key, ctx) in &contexts {
            let gamma = ctx.gamma(d);
            tables[k - 2]
                .get_mut(ctx_key)
                .expect("context of a stored gram is stored")
                .log_backoff = Some(gamma.log10());
        }

        tables.push(table);
        lower_linear = linear;
    }

    KneserNeyModel {
        order,
        vocab: counts.vocab().clone(),
        tables,
        meta: ModelMeta {
            train_tokens: Some(counts.token_count()),
            doc_count: Some(counts.doc_count()),
            discounts: Some(discounts.clone()),
        },
    }
}

/// A model plus the warnings its discount estimation produced.
#[derive(Debug)]
pub struct TrainedModel {
    pub model: KneserNeyModel,
    pub warnings: Vec<String>,
}

/// Count, estimate discounts, and build the model in one step.
pub fn train_model(docs: &[TokenSeq], order: usize, fallback: bool) -> Result<TrainedModel> {
    let counts = count_ngrams(docs, order)?;
    let (discounts, warnings) = estimate_discounts(&counts, fallback)?;
    Ok(TrainedModel {
        model: estimate_model(&counts, &discounts),
        warnings,
    })
}
