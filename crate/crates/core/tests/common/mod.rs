//! Shared test support: an independent brute-force reference implementation
//! of the interpolated modified Kneser-Ney estimator, and synthetic corpus
//! generators.
//!
//! The reference model is deliberately naive: string-keyed maps, recursive
//! queries, no shared code with the library's estimator beyond the published
//! formulas.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

type Gram = Vec<String>;

#[derive(Debug, Clone, Copy)]
pub struct RefDiscounts {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

const REF_FALLBACK: RefDiscounts = RefDiscounts {
    d1: 0.5,
    d2: 1.0,
    d3: 1.5,
};

impl RefDiscounts {
    fn apply(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3,
        }
    }
}

/// Reference interpolated modified Kneser-Ney model over string grams.
pub struct RefModel {
    pub order: usize,
    /// probs[k-1]: linear conditional probability of each stored k-gram.
    pub probs: Vec<BTreeMap<Gram, f64>>,
    /// backoffs[k-1]: linear backoff weight of each stored k-gram context.
    pub backoffs: Vec<BTreeMap<Gram, f64>>,
    /// Predicted vocabulary: word types + </s> + <unk>, excluding <s>.
    pub vocab: BTreeSet<String>,
    pub discounts: Vec<RefDiscounts>,
}

/// Build the reference model with the discount fallback enabled.
pub fn reference_model(docs: &[Vec<String>], order: usize) -> RefModel {
    assert!(order >= 1);

    // raw window counts: at each position the longest window ending there,
    // truncated at the document start; the bare <s> unigram is not kept
    let mut raw: Vec<BTreeMap<Gram, u64>> = vec![BTreeMap::new(); order];
    for doc in docs {
        let mut padded: Vec<String> = Vec::with_capacity(doc.len() + 2);
        padded.push(BOS.to_string());
        padded.extend(doc.iter().cloned());
        padded.push(EOS.to_string());
        for i in 0..padded.len() {
            let start = (i + 1).saturating_sub(order);
            let gram: Gram = padded[start..=i].to_vec();
            if gram.len() == 1 && gram[0] == BOS {
                continue;
            }
            *raw[gram.len() - 1].entry(gram).or_insert(0) += 1;
        }
    }

    // adjusted counts: highest order raw; lower orders are the number of
    // distinct left extensions, except grams beginning with <s> keep raw
    let mut adjusted: Vec<BTreeMap<Gram, u64>> = vec![BTreeMap::new(); order];
    adjusted[order - 1] = raw[order - 1].clone();
    for k in (1..order).rev() {
        let mut table: BTreeMap<Gram, u64> = BTreeMap::new();
        for gram in adjusted[k].keys() {
            let suffix: Gram = gram[1..].to_vec();
            assert_ne!(suffix[0], BOS, "no interior <s>");
            *table.entry(suffix).or_insert(0) += 1;
        }
        for (gram, &count) in &raw[k - 1] {
            if gram[0] == BOS {
                table.insert(gram.clone(), count);
            }
        }
        adjusted[k - 1] = table;
    }

    // discounts per order from counts-of-counts, with the fallback for
    // degenerate or out-of-range values
    let mut discounts = Vec::with_capacity(order);
    for table in adjusted.iter() {
        let mut n = [0u64; 4];
        for &c in table.values() {
            if (1..=4).contains(&c) {
                n[(c - 1) as usize] += 1;
            }
        }
        discounts.push(ref_discounts(n));
    }

    let vocab: BTreeSet<String> = adjusted[0]
        .keys()
        .map(|g| g[0].clone())
        .chain([UNK.to_string()])
        .collect();

    // unigram distribution: discounted continuation counts interpolated
    // with the uniform distribution over the predicted vocabulary
    let mut probs: Vec<BTreeMap<Gram, f64>> = vec![BTreeMap::new(); order];
    let mut backoffs: Vec<BTreeMap<Gram, f64>> = vec![BTreeMap::new(); order];
    let d1 = discounts[0];
    let mass: u64 = adjusted[0].values().sum();
    let mut reserved = 0.0;
    for &c in adjusted[0].values() {
        reserved += d1.apply(c);
    }
    let gamma1 = reserved / mass as f64;
    let uniform = 1.0 / vocab.len() as f64;
    for (gram, &c) in &adjusted[0] {
        let p = (c as f64 - d1.apply(c)).max(0.0) / mass as f64 + gamma1 * uniform;
        probs[0].insert(gram.clone(), p);
    }
    probs[0].insert(vec![UNK.to_string()], gamma1 * uniform);

    // higher orders
    for k in 2..=order {
        let d = discounts[k - 1];
        // context -> (denominator, reserved discount mass)
        let mut denom: BTreeMap<Gram, u64> = BTreeMap::new();
        let mut reserved: BTreeMap<Gram, f64> = BTreeMap::new();
        for (gram, &c) in &adjusted[k - 1] {
            let ctx: Gram = gram[..k - 1].to_vec();
            *denom.entry(ctx.clone()).or_insert(0) += c;
            *reserved.entry(ctx).or_insert(0.0) += d.apply(c);
        }
        for (ctx, &res) in &reserved {
            backoffs[k - 2].insert(ctx.clone(), res / denom[ctx] as f64);
        }
        for (gram, &c) in &adjusted[k - 1] {
            let ctx: Gram = gram[..k - 1].to_vec();
            let gamma = reserved[&ctx] / denom[&ctx] as f64;
            let lower: Gram = gram[1..].to_vec();
            let lower_p = probs[k - 2][&lower];
            let p = (c as f64 - d.apply(c)).max(0.0) / denom[&ctx] as f64 + gamma * lower_p;
            probs[k - 1].insert(gram.clone(), p);
        }
    }

    RefModel {
        order,
        probs,
        backoffs,
        vocab,
        discounts,
    }
}

fn ref_discounts(n: [u64; 4]) -> RefDiscounts {
    if n.contains(&0) {
        return REF_FALLBACK;
    }
    let [n1, n2, n3, n4] = n.map(|x| x as f64);
    let y = n1 / (n1 + 2.0 * n2);
    let d = RefDiscounts {
        d1: 1.0 - 2.0 * y * n2 / n1,
        d2: 2.0 - 3.0 * y * n3 / n2,
        d3: 3.0 - 4.0 * y * n4 / n3,
    };
    let ok = d.d1 > 0.0 && d.d1 <= 1.0 && d.d2 > 0.0 && d.d2 <= 2.0 && d.d3 > 0.0 && d.d3 <= 3.0;
    if ok {
        d
    } else {
        REF_FALLBACK
    }
}

impl RefModel {
    fn resolve(&self, word: &str) -> String {
        if self.vocab.contains(word) && word != BOS {
            word.to_string()
        } else {
            UNK.to_string()
        }
    }

    /// Linear conditional probability by recursive backoff.
    pub fn query(&self, context: &[String], word: &str) -> f64 {
        let word = self.resolve(word);
        let start = context.len().saturating_sub(self.order - 1);
        self.query_inner(&context[start..], &word)
    }

    fn query_inner(&self, context: &[String], word: &str) -> f64 {
        let mut gram: Gram = context.to_vec();
        gram.push(word.to_string());
        if let Some(&p) = self.probs[gram.len() - 1].get(&gram) {
            return p;
        }
        if context.is_empty() {
            return self.probs[0][&vec![UNK.to_string()]];
        }
        let gamma = self.backoffs[context.len() - 1]
            .get(context)
            .copied()
            .unwrap_or(1.0);
        gamma * self.query_inner(&context[1..], word)
    }

    /// (sum of per-token log10 probabilities, scored token count) of a
    /// padded document.
    pub fn sentence_logprob(&self, tokens: &[String]) -> (f64, u64) {
        let mut seq: Vec<String> = Vec::with_capacity(tokens.len() + 2);
        seq.push(BOS.to_string());
        for t in tokens {
            // literal sentinels in document text count as unknown words
            if t == BOS || t == EOS || t == UNK {
                seq.push(UNK.to_string());
            } else {
                seq.push(self.resolve(t));
            }
        }
        seq.push(EOS.to_string());
        let mut sum = 0.0;
        for i in 1..seq.len() {
            let start = i.saturating_sub(self.order - 1);
            sum += self.query_inner(&seq[start..i], &seq[i]).log10();
        }
        (sum, (seq.len() - 1) as u64)
    }
}

/// Small random corpus for oracle comparisons: at most `max_tokens` tokens
/// over a small vocabulary, occasionally with empty documents.
pub fn random_corpus(seed: u64, max_tokens: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = rng.random_range(4..=12);
    random_corpus_inner(&mut rng, max_tokens, vocab_size)
}

/// Random corpus with an explicit vocabulary size (for tests that need many
/// distinct contexts).
pub fn random_corpus_with_vocab(
    seed: u64,
    max_tokens: usize,
    vocab_size: usize,
) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_corpus_inner(&mut rng, max_tokens, vocab_size)
}

fn random_corpus_inner(
    rng: &mut ChaCha8Rng,
    max_tokens: usize,
    vocab_size: usize,
) -> Vec<Vec<String>> {
    let vocab: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let mut docs = Vec::new();
    let mut total = 0usize;
    while total < max_tokens && docs.len() < max_tokens {
        let len = rng.random_range(0..=12usize).min(max_tokens - total);
        let doc: Vec<String> = (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
            .collect();
        total += doc.len();
        docs.push(doc);
    }
    if docs.iter().all(|d| d.is_empty()) {
        docs.push(vec![vocab[0].clone()]);
    }
    docs
}

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "on", "as", "with", "by", "at",
    "from", "this", "be", "are", "was", "or", "an", "not", "we", "you", "they", "but", "have",
    "has", "had", "will", "can", "its", "one", "all",
];

const COOKING_WORDS: &[&str] = &[
    "recipe",
    "oven",
    "butter",
    "flour",
    "sugar",
    "salt",
    "pepper",
    "garlic",
    "onion",
    "tomato",
    "basil",
    "oregano",
    "simmer",
    "boil",
    "roast",
    "bake",
    "grill",
    "saute",
    "whisk",
    "knead",
    "dough",
    "batter",
    "sauce",
    "broth",
    "stock",
    "cream",
    "cheese",
    "pasta",
    "noodle",
    "rice",
    "bean",
    "lentil",
    "spice",
    "cumin",
    "paprika",
    "ginger",
    "cinnamon",
    "vanilla",
    "yeast",
    "marinade",
    "glaze",
    "caramel",
    "chocolate",
    "almond",
    "walnut",
    "honey",
    "vinegar",
    "olive",
    "oil",
    "skillet",
    "pan",
    "pot",
    "ladle",
    "spatula",
    "teaspoon",
    "tablespoon",
    "cup",
    "pinch",
    "dice",
    "chop",
    "mince",
    "slice",
    "grate",
    "peel",
    "zest",
    "fillet",
    "tender",
    "crispy",
    "golden",
    "savory",
    "sweet",
    "bitter",
    "garnish",
    "serve",
    "plate",
    "chill",
    "freeze",
    "thaw",
    "preheat",
    "season",
];

const ASTRONOMY_WORDS: &[&str] = &[
    "telescope",
    "galaxy",
    "nebula",
    "star",
    "planet",
    "orbit",
    "comet",
    "asteroid",
    "meteor",
    "lunar",
    "solar",
    "eclipse",
    "supernova",
    "quasar",
    "pulsar",
    "photon",
    "gravity",
    "cosmic",
    "universe",
    "cosmos",
    "spectrum",
    "redshift",
    "parallax",
    "magnitude",
    "luminosity",
    "constellation",
    "equinox",
    "solstice",
    "aurora",
    "satellite",
    "rover",
    "probe",
    "lander",
    "astronaut",
    "mission",
    "launch",
    "rocket",
    "booster",
    "payload",
    "observatory",
    "dome",
    "mirror",
    "lens",
    "aperture",
    "focal",
    "exposure",
    "crater",
    "basalt",
    "regolith",
    "atmosphere",
    "stratosphere",
    "vacuum",
    "plasma",
    "fusion",
    "hydrogen",
    "helium",
    "lithium",
    "carbon",
    "oxygen",
    "silicon",
    "iron",
    "nickel",
    "core",
    "mantle",
    "crust",
    "tide",
    "axis",
    "rotation",
    "revolution",
    "perihelion",
    "aphelion",
    "apogee",
    "perigee",
    "horizon",
    "zenith",
    "azimuth",
    "declination",
    "transit",
    "occultation",
];

fn pick_zipf(rng: &mut ChaCha8Rng, len: usize) -> usize {
    // quadratic skew toward the front of the list
    let r: f64 = rng.random();
    (((r * r) * len as f64) as usize) % len
}

/// A topic is a Markov chain over the shared content vocabulary: its own
/// successor table plus a unigram bias toward its half of the pool. The two
/// topics therefore overlap heavily in words but differ in phrasing, like
/// real targeted vs. clean web text.
struct Topic {
    /// four preferred successors per content word
    successors: Vec<[usize; 4]>,
    /// indices the topic prefers when starting fresh
    own: std::ops::Range<usize>,
    other: std::ops::Range<usize>,
    /// probability a fresh draw comes from the topic's own half
    own_bias: f64,
}

fn content_pool() -> Vec<&'static str> {
    COOKING_WORDS
        .iter()
        .chain(ASTRONOMY_WORDS.iter())
        .copied()
        .collect()
}

impl Topic {
    fn new(
        seed: u64,
        own: std::ops::Range<usize>,
        other: std::ops::Range<usize>,
        own_bias: f64,
    ) -> Topic {
        let pool_len = content_pool().len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let successors = (0..pool_len)
            .map(|_| {
                std::array::from_fn(|_| {
                    if rng.random_bool(0.8) {
                        own.start + pick_zipf(&mut rng, own.len())
                    } else {
                        rng.random_range(0..pool_len)
                    }
                })
            })
            .collect();
        Topic {
            successors,
            own,
            other,
            own_bias,
        }
    }

    fn fresh_word(&self, rng: &mut ChaCha8Rng) -> usize {
        if rng.random_bool(self.own_bias) {
            self.own.start + pick_zipf(rng, self.own.len())
        } else {
            self.other.start + pick_zipf(rng, self.other.len())
        }
    }
}

fn topic_document(rng: &mut ChaCha8Rng, topic: &Topic, pool: &[&str]) -> String {
    let sentences = rng.random_range(4..=9);
    let mut doc = String::new();
    let mut current = topic.fresh_word(rng);
    for s in 0..sentences {
        if s > 0 {
            doc.push(' ');
        }
        let words = rng.random_range(9..=16);
        for w in 0..words {
            if w > 0 {
                doc.push(' ');
            }
            let roll: f64 = rng.random();
            if roll < 0.25 {
                // function words interleave without advancing the chain
                doc.push_str(FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())]);
            } else if roll < 0.90 {
                current = topic.successors[current][rng.random_range(0..4)];
                doc.push_str(pool[current]);
            } else if roll < 0.995 {
                current = topic.fresh_word(rng);
                doc.push_str(pool[current]);
            } else {
                // rare noise token
                doc.push_str("tok");
                let n: u32 = rng.random_range(0..2000);
                doc.push_str(&n.to_string());
            }
        }
        doc.push('.');
    }
    doc
}

/// Two topically distinct synthetic corpora standing in for the target
/// ("harmful") and clean classes.
pub struct TopicCorpora {
    /// The target class the language model trains on.
    pub train_target: Vec<String>,
    /// Clean documents for baseline training.
    pub train_clean: Vec<String>,
    /// (text, is_target) held-out validation mix.
    pub validation: Vec<(String, bool)>,
    /// (text, is_target) disjoint test mix.
    pub test: Vec<(String, bool)>,
}

/// Generate the two corpora: roughly `bytes_per_class` of each class; the
/// held-out mixes keep a 37:63 target:clean ratio.
///
/// The target class is one topic. The clean class is deliberately
/// heterogeneous — several sub-flavors with their own phrasing, two of which
/// never appear in the baseline training split (clean web data keeps
/// presenting new kinds of content; a model trained only on the target class
/// does not care, a discriminative classifier does).
pub fn topic_corpora(seed: u64, bytes_per_class: usize) -> TopicCorpora {
    let pool = content_pool();
    let half = COOKING_WORDS.len();
    let target_topic = Topic::new(seed ^ 0xA11CE, 0..half, half..pool.len(), 0.75);
    let mut clean_flavors: Vec<Topic> = (0..5u64)
        .map(|j| Topic::new(seed ^ (0xB0B + j), half..pool.len(), 0..half, 0.75))
        .collect();
    // the last unseen flavor shares the target's vocabulary but not its
    // phrasing (think educational articles vs. the targeted content): word
    // presence alone cannot separate it, transition structure can
    clean_flavors.push(Topic::new(seed ^ 0xF00D, 0..half, half..pool.len(), 0.75));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target_docs = Vec::new();
    let mut target_bytes = 0usize;
    while target_bytes < bytes_per_class {
        let doc = topic_document(&mut rng, &target_topic, &pool);
        target_bytes += doc.len();
        target_docs.push(doc);
    }
    // baseline training sees only the first four clean flavors
    let mut clean_docs = Vec::new();
    let mut clean_bytes = 0usize;
    while clean_bytes < bytes_per_class / 2 {
        let doc = topic_document(&mut rng, &clean_flavors[clean_docs.len() % 4], &pool);
        clean_bytes += doc.len();
        clean_docs.push(doc);
    }
    // held-out clean documents cycle through all six flavors
    let mut held_clean = Vec::new();
    let mut held_bytes = 0usize;
    while held_bytes < bytes_per_class * 6 / 10 {
        let doc = topic_document(&mut rng, &clean_flavors[held_clean.len() % 6], &pool);
        held_bytes += doc.len();
        held_clean.push(doc);
    }

    // held-out splits: ~15% of the target docs for validation and test each
    let held = (target_docs.len() / 7).max(20);
    let test_target: Vec<String> = target_docs.split_off(target_docs.len() - held);
    let val_target: Vec<String> = target_docs.split_off(target_docs.len() - held);
    // clean negatives at 63:37 against the target positives
    let neg = (held * 63) / 37;
    assert!(held_clean.len() >= 2 * neg, "not enough clean documents");
    let test_clean: Vec<String> = held_clean.split_off(held_clean.len() - neg);
    let val_clean: Vec<String> = held_clean.split_off(held_clean.len() - neg);

    let mut validation: Vec<(String, bool)> = val_target
        .into_iter()
        .map(|d| (d, true))
        .chain(val_clean.into_iter().map(|d| (d, false)))
        .collect();
    validation.shuffle(&mut rng);
    let mut test: Vec<(String, bool)> = test_target
        .into_iter()
        .map(|d| (d, true))
        .chain(test_clean.into_iter().map(|d| (d, false)))
        .collect();
    test.shuffle(&mut rng);

    TopicCorpora {
        train_target: target_docs,
        train_clean: clean_docs,
        validation,
        test,
    }
}

/// Write documents as JSONLines; `annotate_adult` adds the "adult"
/// annotation to documents flagged true.
pub fn write_jsonl(path: &std::path::Path, docs: &[(String, bool)]) {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for (text, target) in docs {
        let value = if *target {
            serde_json::json!({"content": text, "metadata": {"annotation": ["adult"]}})
        } else {
            serde_json::json!({"content": text})
        };
        writeln!(f, "{value}").unwrap();
    }
}
